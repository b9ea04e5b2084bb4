//! Incompressible Taylor-Green vortex on the periodic square, Crank-Nicolson
//! with the pressure as the multiplier of the divergence constraint.

use std::f64::consts::PI;

use super::{
    relative_linf_error, sweep_levels, timed, BenchCase, ConvergenceReport, LevelResult, Snapshot, SweepOptions,
};
use crate::error::{FuseError, Result};
use crate::mesh::{structured_mesh, DofClass, Rect};
use crate::ops::{random_split_velocity, Space2D, VelocityField};
use crate::refelem::{NodeKind, ReferenceElement};
use crate::sparse::CsrMatrix;
use crate::timeloop::{crank_nicolson_step, SemiDiscreteSystem};
use crate::Vec2;

pub const TG_DT: f64 = 1e-3;
pub const TG_T_FINAL: f64 = 0.1;
pub const TG_NEWTON_TOL: f64 = 1e-8;
pub const TG_NEWTON_MAX_ITER: usize = 8;

/// Exact solution with viscosity `nu` (density 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaylorGreenExact {
    pub nu: f64,
}

impl TaylorGreenExact {
    pub fn velocity(&self, x: Vec2, t: f64) -> Vec2 {
        let d = (-2.0 * self.nu * t).exp();
        [x[0].sin() * x[1].cos() * d, -x[0].cos() * x[1].sin() * d]
    }

    pub fn pressure(&self, x: Vec2, t: f64) -> f64 {
        0.25 * ((2.0 * x[0]).cos() + (2.0 * x[1]).cos()) * (-4.0 * self.nu * t).exp()
    }
}

/// Operators that stay fixed during a run.
struct TgBase {
    space: Space2D,
    nu: f64,
    exact: TaylorGreenExact,
    lap: CsrMatrix,
    /// `[Gx⁺; Gy⁺]`, the pressure gradient (2N × N).
    grad_p: CsrMatrix,
    /// `[Dx⁻ Dy⁻]`, the divergence (N × 2N).
    div: CsrMatrix,
    /// Element-interior dof whose constraint row also pins the pressure.
    pin: usize,
    convection: bool,
}

/// The system for one step, with the convective derivatives upwinded by the
/// velocity at the start of the step.
struct TgStep<'a> {
    base: &'a TgBase,
    cx: CsrMatrix,
    cy: CsrMatrix,
}

impl TgBase {
    fn new(n: usize, p: usize, seed: u64, nu: f64, convection: bool) -> Result<Self> {
        let mesh = structured_mesh(n, n, Rect::square(0.0, 2.0 * PI), [true, true], 1)?;
        let re = ReferenceElement::build(NodeKind::GaussLegendrePlusEndpoints, p)?;
        let space = Space2D::new(mesh, re)?;
        let split = random_split_velocity(seed);
        let [gx, gy] = space.gradient(&VelocityField::Constant(split));
        let [dx, dy] = space.gradient(&VelocityField::Constant([-split[0], -split[1]]));
        let lap = dx.matmul(&gx).add_scaled(1.0, &dy.matmul(&gy), 1.0);
        let grad_p = CsrMatrix::block(&[vec![Some(&gx)], vec![Some(&gy)]]);
        let div = CsrMatrix::block(&[vec![Some(&dx), Some(&dy)]]);
        // the left null vector of the divergence vanishes on element boundaries
        let pin = space
            .dofs
            .classes()
            .iter()
            .position(|c| *c == DofClass::Interior)
            .ok_or_else(|| FuseError::Config("pressure pin needs p >= 2".into()))?;
        Ok(TgBase {
            space,
            nu,
            exact: TaylorGreenExact { nu },
            lap,
            grad_p,
            div,
            pin,
            convection,
        })
    }

    fn n(&self) -> usize {
        self.space.n_dofs()
    }

    fn frozen(&self, u: &[f64]) -> TgStep<'_> {
        let n = self.n();
        let vel: Vec<Vec2> = (0..n).map(|g| [u[g], u[n + g]]).collect();
        let [cx, cy] = self.space.gradient(&VelocityField::PerDof(vel));
        TgStep { base: self, cx, cy }
    }
}

impl SemiDiscreteSystem for TgStep<'_> {
    fn dim(&self) -> usize {
        2 * self.base.n()
    }

    fn rhs(&self, _t: f64, u: &[f64]) -> Result<Vec<f64>> {
        let n = self.base.n();
        let (u1, u2) = u.split_at(n);
        let mut out = Vec::with_capacity(2 * n);
        for c in [u1, u2] {
            let gx = self.cx.mul_vec(c);
            let gy = self.cy.mul_vec(c);
            let lap = self.base.lap.mul_vec(c);
            let conv = if self.base.convection { 1.0 } else { 0.0 };
            out.extend((0..n).map(|g| -conv * (u1[g] * gx[g] + u2[g] * gy[g]) + self.base.nu * lap[g]));
        }
        Ok(out)
    }

    fn rhs_jacobian(&self, _t: f64, u: &[f64]) -> Result<CsrMatrix> {
        let n = self.base.n();
        let (u1, u2) = u.split_at(n);
        let cx_u1 = self.cx.mul_vec(u1);
        let cy_u1 = self.cy.mul_vec(u1);
        let cx_u2 = self.cx.mul_vec(u2);
        let cy_u2 = self.cy.mul_vec(u2);
        let transport = self.cx.scale_rows(u1).add_scaled(1.0, &self.cy.scale_rows(u2), 1.0);
        let visc = self.base.lap.scaled(self.base.nu);
        if !self.base.convection {
            return Ok(CsrMatrix::block(&[vec![Some(&visc), None], vec![None, Some(&visc)]]));
        }
        // ∂(convection)/∂u blocks
        let j11 = transport.add_scaled(1.0, &CsrMatrix::diagonal(&cx_u1), 1.0);
        let j12 = CsrMatrix::diagonal(&cy_u1);
        let j21 = CsrMatrix::diagonal(&cx_u2);
        let j22 = transport.add_scaled(1.0, &CsrMatrix::diagonal(&cy_u2), 1.0);
        let b11 = visc.add_scaled(1.0, &j11, -1.0);
        let b12 = j12.scaled(-1.0);
        let b21 = j21.scaled(-1.0);
        let b22 = visc.add_scaled(1.0, &j22, -1.0);
        Ok(CsrMatrix::block(&[
            vec![Some(&b11), Some(&b12)],
            vec![Some(&b21), Some(&b22)],
        ]))
    }

    fn n_multipliers(&self) -> usize {
        self.base.n()
    }

    fn multiplier_operator(&self) -> Option<&CsrMatrix> {
        Some(&self.base.grad_p)
    }

    /// Discrete divergence; the row of the pin dof also fixes the pressure there.
    fn constraint(&self, t: f64, u: &[f64], lam: &[f64]) -> Result<Vec<f64>> {
        let mut g = self.base.div.mul_vec(u);
        let k = self.base.pin;
        g[k] += lam[k] - self.base.exact.pressure(self.base.space.dofs.coords()[k], t);
        Ok(g)
    }

    fn constraint_jacobian(&self, _t: f64, _u: &[f64], _lam: &[f64]) -> Result<(CsrMatrix, CsrMatrix)> {
        let n = self.base.n();
        let pin = CsrMatrix::from_triplets(n, n, [(self.base.pin, self.base.pin, 1.0)]);
        Ok((self.base.div.clone(), pin))
    }
}

/// Errors and solver statistics of one Taylor-Green level.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorGreenLevel {
    pub dofs: usize,
    /// Relative L∞ errors of `u1`, `u2` and the (mean-adjusted) pressure.
    pub errors: [f64; 3],
    pub steps: usize,
    pub max_newton_iterations: usize,
    pub max_final_residual: f64,
    /// `u1`, `u2` and the mean-adjusted pressure at the end of the run.
    pub solution: Snapshot,
}

/// Runs `n × n` elements to `t_final` with Crank-Nicolson steps of about `dt`.
pub fn taylor_green_level(n: usize, p: usize, seed: u64, dt: f64, t_final: f64) -> Result<TaylorGreenLevel> {
    if p < 2 {
        return Err(FuseError::Config(format!("benchmarks need p >= 2, got {p}")));
    }
    if !(dt > 0.0) || !(t_final >= dt) {
        return Err(FuseError::Config(format!("need 0 < dt <= t_final, got dt={dt} t_final={t_final}")));
    }
    let base = TgBase::new(n, p, seed, 1.0, true)?;
    let nd = base.n();
    let coords = base.space.dofs.coords().to_vec();
    let ex = base.exact;
    let mut u: Vec<f64> = (0..2 * nd).map(|i| ex.velocity(coords[i % nd], 0.0)[i / nd]).collect();
    let mut lam: Vec<f64> = coords.iter().map(|&x| ex.pressure(x, 0.0)).collect();
    let steps = ((t_final / dt) - 1e-9).ceil().max(1.0) as usize;
    let dt = t_final / steps as f64;
    let mut max_newton = 0;
    let mut max_res = 0.0f64;
    for s in 0..steps {
        let sys = base.frozen(&u);
        let step = crank_nicolson_step(&sys, &u, &lam, s as f64 * dt, dt, TG_NEWTON_TOL, TG_NEWTON_MAX_ITER)?;
        max_newton = max_newton.max(step.newton.iterations);
        max_res = max_res.max(*step.newton.history.last().unwrap());
        u = step.u;
        lam = step.lam;
        if u.iter().chain(&lam).any(|v| !v.is_finite()) {
            return Err(FuseError::NonFinite { step: s + 1 });
        }
    }
    let u1_ex: Vec<f64> = coords.iter().map(|&x| ex.velocity(x, t_final)[0]).collect();
    let u2_ex: Vec<f64> = coords.iter().map(|&x| ex.velocity(x, t_final)[1]).collect();
    // the multiplier represents the last midpoint; pressure is defined up to a constant
    let p_ex: Vec<f64> = coords.iter().map(|&x| ex.pressure(x, t_final - 0.5 * dt)).collect();
    let mean = lam.iter().zip(&p_ex).map(|(a, b)| a - b).sum::<f64>() / nd as f64;
    let p_shifted: Vec<f64> = lam.iter().map(|v| v - mean).collect();
    let errors = [
        relative_linf_error(&u[..nd], &u1_ex)?,
        relative_linf_error(&u[nd..], &u2_ex)?,
        relative_linf_error(&p_shifted, &p_ex)?,
    ];
    Ok(TaylorGreenLevel {
        dofs: nd,
        errors,
        steps,
        max_newton_iterations: max_newton,
        max_final_residual: max_res,
        solution: Snapshot::new(coords)
            .with("u1", u[..nd].to_vec())
            .with("u2", u[nd..].to_vec())
            .with("p", p_shifted),
    })
}

/// Decay factor `⟨u1(dt), u1(0)⟩ / ⟨u1(0), u1(0)⟩` of one Crank-Nicolson step
/// of the vortex with the convective term switched off.
pub fn viscous_decay_factor(n: usize, p: usize, dt: f64) -> Result<f64> {
    let base = TgBase::new(n, p, super::DEFAULT_SEED, 1.0, false)?;
    let nd = base.n();
    let coords = base.space.dofs.coords().to_vec();
    let ex = base.exact;
    let u: Vec<f64> = (0..2 * nd).map(|i| ex.velocity(coords[i % nd], 0.0)[i / nd]).collect();
    let lam = vec![0.0; nd];
    let sys = base.frozen(&u);
    let step = crank_nicolson_step(&sys, &u, &lam, 0.0, dt, TG_NEWTON_TOL, TG_NEWTON_MAX_ITER)?;
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    Ok(dot(&step.u[..nd], &u[..nd]) / dot(&u[..nd], &u[..nd]))
}

/// Taylor-Green vortex, `ν = 1`, on `n × n` periodic meshes of `[0, 2π]²`.
pub(crate) fn sweep_taylor_green(opts: &SweepOptions) -> Result<(ConvergenceReport, Snapshot)> {
    let case = BenchCase::TaylorGreen;
    let dt = opts.dt.unwrap_or(TG_DT);
    let t_final = opts.t_final.unwrap_or(TG_T_FINAL);
    let fixed = SweepOptions { dt: Some(dt), ..opts.clone() };
    let (levels, _, snap) = sweep_levels(&fixed, Some((2, dt)), |level, dt| {
        let n = case.elements_at(level);
        let dt = dt.unwrap_or(TG_DT);
        let (out, wall) = timed(|| taylor_green_level(n, opts.p, opts.seed, dt, t_final))?;
        let row = LevelResult {
            level,
            n_elements: n * n,
            dofs: out.dofs,
            errors: out.errors.to_vec(),
            spectral_radius: None,
            wall_time_s: wall,
            dt: Some(t_final / out.steps as f64),
            conservation_drift: None,
            max_newton_iterations: Some(out.max_newton_iterations),
        };
        Ok((row, out.solution))
    })?;
    let report = ConvergenceReport {
        case,
        p: opts.p,
        seed: opts.seed,
        error_names: vec!["u1".into(), "u2".into(), "p".into()],
        levels,
        dt_choice: None,
    };
    Ok((report, snap))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_solution_satisfies_momentum() {
        let ex = TaylorGreenExact { nu: 1.0 };
        let (x, t, h) = ([0.7, 1.9], 0.05, 1e-4);
        let u = |x: Vec2, t: f64| ex.velocity(x, t);
        for c in 0..2 {
            let ut = (u(x, t + h)[c] - u(x, t - h)[c]) / (2.0 * h);
            let dx = (u([x[0] + h, x[1]], t)[c] - u([x[0] - h, x[1]], t)[c]) / (2.0 * h);
            let dy = (u([x[0], x[1] + h], t)[c] - u([x[0], x[1] - h], t)[c]) / (2.0 * h);
            let conv = u(x, t)[0] * dx + u(x, t)[1] * dy;
            let mut xp = x;
            let mut xm = x;
            xp[c] += h;
            xm[c] -= h;
            let dp = (ex.pressure(xp, t) - ex.pressure(xm, t)) / (2.0 * h);
            let lap = (u([x[0] + h, x[1]], t)[c] + u([x[0] - h, x[1]], t)[c] + u([x[0], x[1] + h], t)[c]
                + u([x[0], x[1] - h], t)[c]
                - 4.0 * u(x, t)[c])
                / (h * h);
            assert!((ut + conv + dp - lap).abs() < 1e-6, "component {c}");
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let base = TgBase::new(3, 2, 7, 1.0, true).unwrap();
        let nd = base.n();
        let u: Vec<f64> = (0..2 * nd).map(|i| (0.37 * i as f64).sin()).collect();
        let sys = base.frozen(&u);
        let j = sys.rhs_jacobian(0.0, &u).unwrap();
        let f0 = sys.rhs(0.0, &u).unwrap();
        let eps = 1e-7;
        for col in [0, 5, nd + 3, 2 * nd - 1] {
            let mut up = u.clone();
            up[col] += eps;
            let f1 = sys.rhs(0.0, &up).unwrap();
            for r in 0..2 * nd {
                let fd = (f1[r] - f0[r]) / eps;
                assert!((fd - j.get(r, col)).abs() < 1e-4 * (1.0 + fd.abs()), "r={r} c={col}");
            }
        }
    }

    #[test]
    fn short_run_converges_quickly() {
        let out = taylor_green_level(4, 2, 3, 1e-3, 3e-3).unwrap();
        assert!(out.max_newton_iterations <= 3);
        assert!(out.max_final_residual <= TG_NEWTON_TOL);
        assert!(out.errors.iter().all(|e| e.is_finite()));
    }

    #[test]
    fn viscous_step_matches_exponential_decay() {
        // exact factor e^{−2dt}; Crank-Nicolson is (1 − dt)/(1 + dt), off by O(dt³)
        let gap = |dt: f64| (viscous_decay_factor(6, 4, dt).unwrap() - (-2.0 * dt).exp()).abs();
        let (g1, g2) = (gap(0.1), gap(0.05));
        assert!(g1 < 1e-3, "{g1}");
        assert!(g1 / g2 > 6.0, "{g1} {g2}");
    }
}
