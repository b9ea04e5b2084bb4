//! RK4, Crank-Nicolson and Newton's method.

use crate::error::{FuseError, Result};
use crate::sparse::{norm2, CsrMatrix, SparseLu};

/// `du/dt = f(t, u) − B λ` subject to `g(t, u, λ) = 0`.
///
/// Systems without constraints leave the multiplier hooks at their defaults.
pub trait SemiDiscreteSystem {
    /// Length of the differential state `u`.
    fn dim(&self) -> usize;

    fn rhs(&self, t: f64, u: &[f64]) -> Result<Vec<f64>>;

    /// `∂f/∂u`; required by implicit schemes.
    fn rhs_jacobian(&self, _t: f64, _u: &[f64]) -> Result<CsrMatrix> {
        Err(FuseError::InvalidArgument("system has no Jacobian for implicit stepping".into()))
    }

    /// Number of algebraic multipliers `λ`.
    fn n_multipliers(&self) -> usize {
        0
    }

    /// `B` (dim × n_multipliers).
    fn multiplier_operator(&self) -> Option<&CsrMatrix> {
        None
    }

    /// `g(t, u, λ)`; `t` is the time level the multiplier represents.
    fn constraint(&self, _t: f64, _u: &[f64], _lam: &[f64]) -> Result<Vec<f64>> {
        Ok(Vec::new())
    }

    /// `(∂g/∂u, ∂g/∂λ)`.
    fn constraint_jacobian(&self, _t: f64, _u: &[f64], _lam: &[f64]) -> Result<(CsrMatrix, CsrMatrix)> {
        Ok((CsrMatrix::zeros(0, self.dim()), CsrMatrix::zeros(0, 0)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    Rk4,
    CrankNicolson,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub t_final: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
}

impl IntegratorConfig {
    pub fn rk4(dt: f64, t_final: f64) -> Self {
        IntegratorConfig {
            scheme: Scheme::Rk4,
            dt,
            t_final,
            newton_tol: 1e-8,
            newton_max_iter: 20,
        }
    }

    pub fn crank_nicolson(dt: f64, t_final: f64) -> Self {
        IntegratorConfig {
            scheme: Scheme::CrankNicolson,
            ..Self::rk4(dt, t_final)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_final > 0.0) || self.dt > self.t_final {
            return Err(FuseError::Config(format!(
                "need 0 < dt <= t_final, got dt={} t_final={}",
                self.dt, self.t_final
            )));
        }
        if !(self.newton_tol > 0.0) || self.newton_max_iter == 0 {
            return Err(FuseError::Config("newton_tol and newton_max_iter must be positive".into()));
        }
        Ok(())
    }

    /// Number of steps and the step size that lands exactly on `t_final`.
    pub fn steps(&self) -> (usize, f64) {
        let n = ((self.t_final / self.dt) - 1e-9).ceil().max(1.0) as usize;
        (n, self.t_final / n as f64)
    }
}

fn axpy(y: &[f64], a: f64, x: &[f64]) -> Vec<f64> {
    y.iter().zip(x).map(|(y, x)| y + a * x).collect()
}

/// Classical four-stage Runge-Kutta step (multipliers ignored).
pub fn rk4_step(sys: &dyn SemiDiscreteSystem, u: &[f64], t: f64, dt: f64) -> Result<Vec<f64>> {
    let k1 = sys.rhs(t, u)?;
    let k2 = sys.rhs(t + 0.5 * dt, &axpy(u, 0.5 * dt, &k1))?;
    let k3 = sys.rhs(t + 0.5 * dt, &axpy(u, 0.5 * dt, &k2))?;
    let k4 = sys.rhs(t + dt, &axpy(u, dt, &k3))?;
    Ok((0..u.len())
        .map(|i| u[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct NewtonResult {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `‖R‖₂` at every iterate, starting with the guess.
    pub history: Vec<f64>,
}

/// Full-step Newton iteration; returns the first iterate with `‖R‖₂ ≤ tol`.
pub fn newton_solve(
    mut residual: impl FnMut(&[f64]) -> Result<Vec<f64>>,
    mut jacobian: impl FnMut(&[f64]) -> Result<CsrMatrix>,
    guess: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<NewtonResult> {
    let mut x = guess.to_vec();
    let mut r = residual(&x)?;
    let mut history = vec![norm2(&r)];
    let mut lu: Option<SparseLu> = None;
    for it in 0..=max_iter {
        let rn = *history.last().unwrap();
        if !rn.is_finite() {
            return Err(FuseError::NewtonNoConvergence { iterations: it, history });
        }
        if rn <= tol {
            return Ok(NewtonResult { x, iterations: it, history });
        }
        if it == max_iter {
            break;
        }
        let j = jacobian(&x)?;
        match lu.as_mut() {
            Some(f) => f.refactor(&j)?,
            None => lu = Some(SparseLu::new(&j)?),
        }
        let dx = lu.as_ref().unwrap().solve(&r)?;
        for (xi, d) in x.iter_mut().zip(&dx) {
            *xi -= d;
        }
        r = residual(&x)?;
        history.push(norm2(&r));
    }
    Err(FuseError::NewtonNoConvergence {
        iterations: max_iter,
        history,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CnStep {
    pub u: Vec<f64>,
    /// Multipliers, representing the midpoint `t + dt/2`.
    pub lam: Vec<f64>,
    pub newton: NewtonResult,
}

/// One Crank-Nicolson step on the coupled unknown `(u, λ)`:
/// `(u' − u)/dt − ½(f(u') + f(u)) + B λ = 0`, `g(t + dt/2, u', λ) = 0`.
pub fn crank_nicolson_step(
    sys: &dyn SemiDiscreteSystem,
    u: &[f64],
    lam_guess: &[f64],
    t: f64,
    dt: f64,
    tol: f64,
    max_iter: usize,
) -> Result<CnStep> {
    let n = sys.dim();
    let m = sys.n_multipliers();
    if u.len() != n || lam_guess.len() != m {
        return Err(FuseError::InvalidArgument("state or multiplier length mismatch".into()));
    }
    let f0 = sys.rhs(t, u)?;
    let t1 = t + dt;
    let tm = t + 0.5 * dt;
    let b = sys.multiplier_operator();
    let residual = |w: &[f64]| -> Result<Vec<f64>> {
        let (un, lam) = w.split_at(n);
        let f1 = sys.rhs(t1, un)?;
        let mut r: Vec<f64> = (0..n)
            .map(|i| (un[i] - u[i]) / dt - 0.5 * (f1[i] + f0[i]))
            .collect();
        if let Some(b) = b {
            for (ri, bl) in r.iter_mut().zip(b.mul_vec(lam)) {
                *ri += bl;
            }
        }
        r.extend(sys.constraint(tm, un, lam)?);
        Ok(r)
    };
    let jacobian = |w: &[f64]| -> Result<CsrMatrix> {
        let (un, lam) = w.split_at(n);
        let jf = sys.rhs_jacobian(t1, un)?;
        let top_left = CsrMatrix::identity(n).add_scaled(1.0 / dt, &jf, -0.5);
        if m == 0 {
            return Ok(top_left);
        }
        let (gu, gl) = sys.constraint_jacobian(tm, un, lam)?;
        let b = b.ok_or_else(|| FuseError::InvalidArgument("multipliers without an operator".into()))?;
        Ok(CsrMatrix::block(&[
            vec![Some(&top_left), Some(b)],
            vec![Some(&gu), Some(&gl)],
        ]))
    };
    let mut guess = u.to_vec();
    guess.extend_from_slice(lam_guess);
    let res = newton_solve(residual, jacobian, &guess, tol, max_iter)?;
    let (un, lam) = res.x.split_at(n);
    Ok(CnStep {
        u: un.to_vec(),
        lam: lam.to_vec(),
        newton: res.clone(),
    })
}

/// Statistics of a complete run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunStats {
    pub steps: usize,
    pub dt: f64,
    pub max_newton_iterations: usize,
    pub max_final_residual: f64,
}

/// Integrates to `t_final`; `observe(step, t, u)` is called after every step.
pub fn integrate(
    sys: &dyn SemiDiscreteSystem,
    u0: &[f64],
    lam0: &[f64],
    cfg: &IntegratorConfig,
    mut observe: impl FnMut(usize, f64, &[f64]),
) -> Result<(Vec<f64>, Vec<f64>, RunStats)> {
    cfg.validate()?;
    let (steps, dt) = cfg.steps();
    let mut u = u0.to_vec();
    let mut lam = lam0.to_vec();
    let mut stats = RunStats {
        steps,
        dt,
        max_newton_iterations: 0,
        max_final_residual: 0.0,
    };
    for s in 0..steps {
        let t = s as f64 * dt;
        match cfg.scheme {
            Scheme::Rk4 => u = rk4_step(sys, &u, t, dt)?,
            Scheme::CrankNicolson => {
                let step = crank_nicolson_step(sys, &u, &lam, t, dt, cfg.newton_tol, cfg.newton_max_iter)?;
                stats.max_newton_iterations = stats.max_newton_iterations.max(step.newton.iterations);
                stats.max_final_residual = stats
                    .max_final_residual
                    .max(*step.newton.history.last().unwrap());
                u = step.u;
                lam = step.lam;
            }
        }
        if u.iter().chain(&lam).any(|v| !v.is_finite()) {
            return Err(FuseError::NonFinite { step: s + 1 });
        }
        observe(s + 1, (s + 1) as f64 * dt, &u);
    }
    Ok((u, lam, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Linear(Vec<f64>);

    impl SemiDiscreteSystem for Linear {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn rhs(&self, _t: f64, u: &[f64]) -> Result<Vec<f64>> {
            Ok(u.iter().zip(&self.0).map(|(u, l)| l * u).collect())
        }
        fn rhs_jacobian(&self, _t: f64, _u: &[f64]) -> Result<CsrMatrix> {
            Ok(CsrMatrix::diagonal(&self.0))
        }
    }

    #[test]
    fn rk4_cases() {
        let u = rk4_step(&Linear(vec![-1.0]), &[1.0], 0.0, 0.1).unwrap();
        assert!((u[0] - (-0.1f64).exp()).abs() <= 1e-7);
        let u0 = [0.3, -2.0];
        assert_eq!(rk4_step(&Linear(vec![0.0, 0.0]), &u0, 0.0, 0.5).unwrap(), u0.to_vec());
        let u = rk4_step(&Linear(vec![-1.0, -2.0]), &[1.0, 1.0], 0.0, 0.1).unwrap();
        let v = rk4_step(&Linear(vec![-2.0]), &[1.0], 0.0, 0.1).unwrap();
        assert_eq!(u[1], v[0]);
        for z in [-0.5f64, 0.2, -2.5] {
            let r = rk4_step(&Linear(vec![z]), &[1.0], 0.0, 1.0).unwrap()[0];
            let taylor = 1.0 + z + z * z / 2.0 + z.powi(3) / 6.0 + z.powi(4) / 24.0;
            assert!((r - taylor).abs() < 1e-15);
        }
    }

    #[test]
    fn cn_cases() {
        let s = crank_nicolson_step(&Linear(vec![-1.0]), &[1.0], &[], 0.0, 0.1, 1e-14, 5).unwrap();
        assert!((s.u[0] - 0.95 / 1.05).abs() < 1e-12);
        assert!(s.newton.iterations <= 1);
        for dt in [1e-3, 1.0, 1e3] {
            let s = crank_nicolson_step(&Linear(vec![-1000.0]), &[1.0], &[], 0.0, dt, 1e-12, 5).unwrap();
            assert!(s.u[0].abs() < 1.0);
        }
        // time symmetry
        let sys = Linear(vec![-3.0, 0.5]);
        let a = crank_nicolson_step(&sys, &[1.0, 2.0], &[], 0.0, 0.2, 1e-14, 5).unwrap();
        let b = crank_nicolson_step(&sys, &a.u, &[], 0.2, -0.2, 1e-14, 5).unwrap();
        assert!((b.u[0] - 1.0).abs() < 1e-12 && (b.u[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn newton_cases() {
        let r = newton_solve(
            |x| Ok(vec![x[0] * x[0] - 4.0]),
            |x| Ok(CsrMatrix::diagonal(&[2.0 * x[0]])),
            &[3.0],
            1e-12,
            6,
        )
        .unwrap();
        assert!((r.x[0] - 2.0).abs() < 1e-12);
        assert!(r.iterations <= 6);
        let a = CsrMatrix::from_dense(&[vec![2.0, 1.0], vec![1.0, 3.0]]);
        let r = newton_solve(
            |x| Ok(a.mul_vec(x).iter().zip([3.0, 4.0]).map(|(p, q)| p - q).collect()),
            |_| Ok(a.clone()),
            &[0.0, 0.0],
            1e-12,
            5,
        )
        .unwrap();
        assert_eq!(r.iterations, 1);
        let e = newton_solve(
            |x| Ok(vec![x[0] * x[0] + 1.0]),
            |x| Ok(CsrMatrix::from_dense(&[vec![2.0 * x[0] + 1e-3]])),
            &[1.0],
            1e-12,
            4,
        );
        match e {
            Err(FuseError::NewtonNoConvergence { history, .. }) => assert_eq!(history.len(), 5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn integrate_lands_on_final_time() {
        let cfg = IntegratorConfig::rk4(0.03, 0.1);
        let mut last = 0.0;
        let (u, _, st) = integrate(&Linear(vec![-1.0]), &[1.0], &[], &cfg, |_, t, _| last = t).unwrap();
        assert_eq!(st.steps, 4);
        assert!((last - 0.1).abs() < 1e-15);
        assert!((u[0] - (-0.1f64).exp()).abs() < 1e-8);
    }
}
