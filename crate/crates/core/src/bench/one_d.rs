//! 1D benchmarks: linear advection, Poisson and the Euler equations.

use super::{
    cell_averages, conservation_drift, relative_linf_error, sweep_levels, timed, BenchCase,
    ConvergenceReport, LevelResult, LinearSystem, Snapshot, SweepOptions,
};
use crate::error::{FuseError, Result};
use crate::mesh::Mesh1D;
use crate::ops::{
    apply_system_flux_divergence_1d, assemble_first_derivative_1d, assemble_laplacian_1d,
    impose_dirichlet, ElementStencils1D, EulerFlux1D, FluxSystem, VelocityField,
};
use crate::refelem::{NodeKind, ReferenceElement};
use crate::sparse::{sparse_lu_solve, CsrMatrix};
use crate::timeloop::{integrate, IntegratorConfig, SemiDiscreteSystem};
use crate::vnstab::operator_spectral_radius;

const CFL: f64 = 0.5;

pub(crate) fn fuse_element(p: usize) -> Result<ReferenceElement> {
    if p < 2 {
        return Err(FuseError::Config(format!("benchmarks need p >= 2, got {p}")));
    }
    ReferenceElement::build(NodeKind::GaussLegendrePlusEndpoints, p)
}

/// Smallest node spacing on a uniform mesh of `n` elements of `[0, 1]`.
fn min_spacing(re: &ReferenceElement, n: usize) -> f64 {
    let u = re.nodes.unit_coords();
    u.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min) / n as f64
}

fn gaussian(x: f64) -> f64 {
    (-100.0 * (x - 0.5) * (x - 0.5)).exp()
}

/// Periodic extension of `exp(−100 (x − 0.5)²)` translated by `shift`.
pub fn advection_1d_initial(x: f64, shift: f64) -> f64 {
    let y = (x - shift).rem_euclid(1.0);
    (-2..=2).map(|m| gaussian(y + m as f64)).sum()
}

/// Periodic `[0, 1]` mesh of `n` elements and the upwinded `∂/∂x` for `a = 1`.
pub fn advection_1d_operator(p: usize, n: usize) -> Result<(Mesh1D, ReferenceElement, CsrMatrix)> {
    let re = fuse_element(p)?;
    let mesh = Mesh1D::uniform(n, (0.0, 1.0), true)?;
    let op = assemble_first_derivative_1d(&mesh, &re, &VelocityField::constant_1d(1.0))?;
    Ok((mesh, re, op))
}

/// `u_t + u_x = 0` on the periodic unit interval, Gaussian pulse, RK4.
pub(crate) fn sweep_advection_1d(opts: &SweepOptions) -> Result<(ConvergenceReport, Snapshot)> {
    let case = BenchCase::Advection1d;
    let t_final = opts.t_final.unwrap_or(1.0);
    let re = fuse_element(opts.p)?;
    let finest = *opts.levels.iter().max().unwrap_or(&0);
    let dt0 = CFL * min_spacing(&re, case.elements_at(finest));
    let (levels, dt_choice, snap) = sweep_levels(opts, Some((4, dt0)), |level, dt| {
        let ((row, snap), wall) = timed(|| {
            let n = case.elements_at(level);
            let (mesh, re, op) = advection_1d_operator(opts.p, n)?;
            let dofs = mesh.dofs(&re.nodes);
            let u0: Vec<f64> = dofs.coords().iter().map(|&x| advection_1d_initial(x, 0.0)).collect();
            let exact: Vec<f64> = dofs.coords().iter().map(|&x| advection_1d_initial(x, t_final)).collect();
            let radius = if opts.spectral_radius {
                Some(operator_spectral_radius(&op)?)
            } else {
                None
            };
            let sys = LinearSystem { op };
            let dt = dt.expect("time step");
            let (u, _, stats) = integrate(&sys, &u0, &[], &IntegratorConfig::rk4(dt, t_final), |_, _, _| {})?;
            let drift = conservation_drift(&cell_averages(&u0, &dofs, &re)?, &cell_averages(&u, &dofs, &re)?);
            let snap = Snapshot::from_1d(dofs.coords()).with("u", u.clone()).with("exact", exact.clone());
            let row = LevelResult {
                level,
                n_elements: n,
                dofs: dofs.n_dofs(),
                errors: vec![relative_linf_error(&u, &exact)?],
                spectral_radius: radius,
                wall_time_s: 0.0,
                dt: Some(stats.dt),
                conservation_drift: Some(drift),
                max_newton_iterations: None,
            };
            Ok((row, snap))
        })?;
        Ok((LevelResult { wall_time_s: wall, ..row }, snap))
    })?;
    let report = ConvergenceReport {
        case,
        p: opts.p,
        seed: opts.seed,
        error_names: vec!["u".into()],
        levels,
        dt_choice,
    };
    Ok((report, snap))
}

/// Solves `−L u = f` on `[0, 1]` with Dirichlet data from `exact`. Returns the
/// dof coordinates, the discrete solution, the exact nodal values and the
/// Dirichlet-modified system matrix.
pub fn solve_poisson_1d(
    p: usize,
    n: usize,
    exact: impl Fn(f64) -> f64,
    f: impl Fn(f64) -> f64,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, CsrMatrix)> {
    let re = fuse_element(p)?;
    let mesh = Mesh1D::uniform(n, (0.0, 1.0), false)?;
    let lap = assemble_laplacian_1d(&mesh, &re, 1.0)?;
    let x = mesh.dofs(&re.nodes).coords().to_vec();
    let rhs: Vec<f64> = x.iter().map(|&x| f(x)).collect();
    let last = x.len() - 1;
    let (k, b) = impose_dirichlet(&lap.scaled(-1.0), &rhs, &[0, last], &[exact(x[0]), exact(x[last])])?;
    let u = sparse_lu_solve(&k, &b)?;
    let ex = x.iter().map(|&x| exact(x)).collect();
    Ok((x, u, ex, k))
}

/// `exp(sin 2πx) − 1`.
pub fn poisson_1d_exact(x: f64) -> f64 {
    (2.0 * std::f64::consts::PI * x).sin().exp() - 1.0
}

/// `−u''` of [`poisson_1d_exact`].
pub fn poisson_1d_source(x: f64) -> f64 {
    let w = 2.0 * std::f64::consts::PI;
    let (s, c) = (w * x).sin_cos();
    -(s.exp() * (w * w * c * c - w * w * s))
}

/// `−u'' = f` with `u = exp(sin 2πx) − 1` and Dirichlet ends.
pub(crate) fn sweep_poisson_1d(opts: &SweepOptions) -> Result<(ConvergenceReport, Snapshot)> {
    let case = BenchCase::Poisson1d;
    let (levels, _, snap) = sweep_levels(opts, None, |level, _| {
        let n = case.elements_at(level);
        let ((row, snap), wall) = timed(|| {
            let (x, u, ex, k) = solve_poisson_1d(opts.p, n, poisson_1d_exact, poisson_1d_source)?;
            let radius = if opts.spectral_radius {
                Some(operator_spectral_radius(&k)?)
            } else {
                None
            };
            let row = LevelResult {
                level,
                n_elements: n,
                dofs: u.len(),
                errors: vec![relative_linf_error(&u, &ex)?],
                spectral_radius: radius,
                wall_time_s: 0.0,
                dt: None,
                conservation_drift: None,
                max_newton_iterations: None,
            };
            Ok((row, Snapshot::from_1d(&x).with("u", u).with("exact", ex)))
        })?;
        Ok((LevelResult { wall_time_s: wall, ..row }, snap))
    })?;
    let report = ConvergenceReport {
        case,
        p: opts.p,
        seed: opts.seed,
        error_names: vec!["u".into()],
        levels,
        dt_choice: None,
    };
    Ok((report, snap))
}

/// Semi-discrete 1D Euler equations; the state is component-major
/// `(ρ, ρv, E)`, each of length `n_dofs`.
pub struct EulerSystem1D {
    pub stencils: ElementStencils1D,
    pub flux: EulerFlux1D,
}

impl EulerSystem1D {
    pub fn new(mesh: &Mesh1D, re: &ReferenceElement) -> Self {
        EulerSystem1D {
            stencils: ElementStencils1D::new(mesh, re),
            flux: EulerFlux1D::default(),
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.stencils.dofs.n_dofs()
    }

    /// Flattened conserved state from primitive profiles `x ↦ (ρ, v, p)`.
    pub fn state(&self, prim: impl Fn(f64) -> (f64, f64, f64)) -> Vec<f64> {
        let n = self.n_dofs();
        let mut u = vec![0.0; 3 * n];
        for (g, &x) in self.stencils.dofs.coords().iter().enumerate() {
            let (r, v, p) = prim(x);
            let c = self.flux.conserved(r, v, p);
            for k in 0..3 {
                u[k * n + g] = c[k];
            }
        }
        u
    }
}

impl SemiDiscreteSystem for EulerSystem1D {
    fn dim(&self) -> usize {
        3 * self.n_dofs()
    }

    fn rhs(&self, _t: f64, u: &[f64]) -> Result<Vec<f64>> {
        let comps: Vec<Vec<f64>> = u.chunks(self.n_dofs()).map(<[f64]>::to_vec).collect();
        let div = apply_system_flux_divergence_1d(&comps, &self.flux as &dyn FluxSystem, &self.stencils)?;
        Ok(div.into_iter().flatten().map(|v| -v).collect())
    }
}

/// `1 + 0.2 exp(−100 (x − 0.5)²)` translated periodically by `shift`.
pub fn euler_initial_density(x: f64, shift: f64) -> f64 {
    1.0 + 0.2 * advection_1d_initial(x, shift)
}

/// One Euler level with uniform velocity `v` and pressure 1. Errors are
/// `[max, ρ, ρv, E]`; the momentum entry is absolute when `v = 0`.
pub fn run_euler_1d_level(p: usize, n: usize, v: f64, dt: f64, t_final: f64) -> Result<(LevelResult, Snapshot)> {
    let re = fuse_element(p)?;
    let ((row, snap), wall) = timed(|| {
        let mesh = Mesh1D::uniform(n, (0.0, 1.0), true)?;
        let sys = EulerSystem1D::new(&mesh, &re);
        let u0 = sys.state(|x| (euler_initial_density(x, 0.0), v, 1.0));
        let exact = sys.state(|x| (euler_initial_density(x, v * t_final), v, 1.0));
        let (u, _, stats) = integrate(&sys, &u0, &[], &IntegratorConfig::rk4(dt, t_final), |_, _, _| {})?;
        let nd = sys.n_dofs();
        let dofs = &sys.stencils.dofs;
        let mut errors = vec![0.0];
        let mut drift = 0.0f64;
        for k in 0..3 {
            let r = k * nd..(k + 1) * nd;
            let e = match relative_linf_error(&u[r.clone()], &exact[r.clone()]) {
                Ok(e) => e,
                Err(_) => u[r.clone()].iter().fold(0.0f64, |m, w| m.max(w.abs())),
            };
            errors[0] = f64::max(errors[0], e);
            errors.push(e);
            let a0 = cell_averages(&u0[r.clone()], dofs, &re)?;
            let a1 = cell_averages(&u[r], dofs, &re)?;
            drift = drift.max(conservation_drift(&a0, &a1));
        }
        let row = LevelResult {
            level: 0,
            n_elements: n,
            dofs: nd,
            errors,
            spectral_radius: None,
            wall_time_s: 0.0,
            dt: Some(stats.dt),
            conservation_drift: Some(drift),
            max_newton_iterations: None,
        };
        let mut snap = Snapshot::from_1d(dofs.coords());
        for (k, name) in ["rho", "momentum", "energy"].into_iter().enumerate() {
            snap = snap.with(name, u[k * nd..(k + 1) * nd].to_vec());
        }
        Ok((row, snap))
    })?;
    Ok((LevelResult { wall_time_s: wall, ..row }, snap))
}

/// Density pulse carried by a uniform flow (`v = 1`, `p = 1`), RK4.
pub(crate) fn sweep_euler_1d(opts: &SweepOptions) -> Result<(ConvergenceReport, Snapshot)> {
    let case = BenchCase::Euler1d;
    let t_final = opts.t_final.unwrap_or(0.12);
    let re = fuse_element(opts.p)?;
    let finest = *opts.levels.iter().max().unwrap_or(&0);
    let gamma = EulerFlux1D::default().gamma;
    let speed = 1.0 + gamma.sqrt();
    let dt0 = CFL * min_spacing(&re, case.elements_at(finest)) / speed;
    let (levels, dt_choice, snap) = sweep_levels(opts, Some((4, dt0)), |level, dt| {
        let (row, snap) = run_euler_1d_level(opts.p, case.elements_at(level), 1.0, dt.expect("time step"), t_final)?;
        Ok((LevelResult { level, ..row }, snap))
    })?;
    let report = ConvergenceReport {
        case,
        p: opts.p,
        seed: opts.seed,
        error_names: vec!["max".into(), "rho".into(), "momentum".into(), "energy".into()],
        levels,
        dt_choice,
    };
    Ok((report, snap))
}

/// Largest change of a constant Euler state after `steps` RK4 steps.
pub fn euler_constant_state_drift(p: usize, n: usize, steps: usize) -> Result<f64> {
    let re = fuse_element(p)?;
    let mesh = Mesh1D::uniform(n, (0.0, 1.0), true)?;
    let sys = EulerSystem1D::new(&mesh, &re);
    let u0 = sys.state(|_| (1.3, 0.7, 2.0));
    let dt = 1e-3;
    let (u, _, _) = integrate(&sys, &u0, &[], &IntegratorConfig::rk4(dt, dt * steps as f64), |_, _, _| {})?;
    Ok(u.iter().zip(&u0).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_source_matches_finite_difference() {
        let h = 1e-4;
        for x in [0.1, 0.37, 0.8] {
            let fd = -(poisson_1d_exact(x + h) - 2.0 * poisson_1d_exact(x) + poisson_1d_exact(x - h)) / (h * h);
            assert!((fd - poisson_1d_source(x)).abs() < 1e-4 * poisson_1d_source(x).abs().max(1.0));
        }
    }

    #[test]
    fn poisson_exact_for_polynomials() {
        for p in [2, 3, 4] {
            let c: Vec<f64> = (0..=p).map(|k| 0.3 + 0.1 * k as f64).collect();
            let u = |x: f64| c.iter().rev().fold(0.0, |acc, ck| acc * x + ck);
            let f = |x: f64| {
                -(2..=p)
                    .map(|k| c[k] * (k * (k - 1)) as f64 * x.powi(k as i32 - 2))
                    .sum::<f64>()
            };
            let (_, un, ex, _) = solve_poisson_1d(p, 5, u, f).unwrap();
            assert!(un.iter().zip(&ex).all(|(a, b)| (a - b).abs() < 1e-9), "p={p}");
        }
    }

    #[test]
    fn constant_euler_state_is_steady() {
        assert!(euler_constant_state_drift(3, 6, 10).unwrap() < 1e-12);
    }

    #[test]
    fn resting_density_profile_is_stationary() {
        let (row, _) = run_euler_1d_level(3, 16, 0.0, 1e-3, 0.05).unwrap();
        // uniform pressure and zero velocity: only roundoff moves the state
        assert!(row.errors[0] < 1e-12, "{:?}", row.errors);
    }

    #[test]
    fn advection_conserves_cell_averages() {
        let mut opts = SweepOptions::new(BenchCase::Advection1d, 3);
        opts.levels = vec![0];
        opts.dt = Some(1e-2);
        opts.t_final = Some(0.1);
        let (r, _) = sweep_advection_1d(&opts).unwrap();
        assert!(r.levels[0].conservation_drift.unwrap() < 1e-13);
    }
}
