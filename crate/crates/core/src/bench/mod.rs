//! Benchmark problems, error norms, observed orders and convergence reports.

mod one_d;
mod taylor_green;
mod two_d;

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use crate::error::{FuseError, Result};
use crate::mesh::DofMap1D;
use crate::refelem::ReferenceElement;
use crate::sparse::CsrMatrix;
use crate::timeloop::SemiDiscreteSystem;
use crate::Vec2;

pub use one_d::{
    advection_1d_initial, advection_1d_operator, euler_constant_state_drift, euler_initial_density,
    poisson_1d_exact, poisson_1d_source, run_euler_1d_level, solve_poisson_1d, EulerSystem1D,
};
pub use taylor_green::{
    taylor_green_level, viscous_decay_factor, TaylorGreenExact, TaylorGreenLevel,
    TG_DT, TG_NEWTON_MAX_ITER, TG_NEWTON_TOL, TG_T_FINAL,
};
pub use two_d::{
    advection_2d_initial, advection_2d_mesh, advection_2d_operator, circle_exact,
    circle_laplacian_min_real_part, circle_source, inflow_dofs, solve_poisson_circle, MeshKind,
};

/// Fraction of the spatial error the temporal error may reach.
pub const TEMPORAL_FRACTION: f64 = 0.01;
pub const DEFAULT_SEED: u64 = 20240101;

/// `max |u − e| / max |e|` over the dofs.
pub fn relative_linf_error(u: &[f64], exact: &[f64]) -> Result<f64> {
    if u.len() != exact.len() {
        return Err(FuseError::InvalidArgument(format!(
            "error of {} values against {} exact values",
            u.len(),
            exact.len()
        )));
    }
    let scale = exact.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if !(scale > 0.0) {
        return Err(FuseError::Numerical("exact solution has zero norm".into()));
    }
    let diff = u.iter().zip(exact).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(diff / scale)
}

/// `log2(e_coarse / e_fine)` for one halving of the mesh size.
pub fn observed_order(e_coarse: f64, e_fine: f64) -> Result<f64> {
    if !(e_coarse > 0.0) || !(e_fine > 0.0) {
        return Err(FuseError::Numerical(format!(
            "order undefined for errors {e_coarse:e} and {e_fine:e}"
        )));
    }
    Ok((e_coarse / e_fine).log2())
}

/// Orders between consecutive entries of an error sequence.
pub fn observed_orders(errors: &[f64]) -> Result<Vec<f64>> {
    if errors.len() < 2 {
        return Err(FuseError::InvalidArgument("need at least two levels".into()));
    }
    errors.windows(2).map(|w| observed_order(w[0], w[1])).collect()
}

/// Per-element averages from the interior Gauss nodes,
/// `ū_k = ½ Σ_i w_i u(s_{k,i})`.
pub fn cell_averages(u: &[f64], dofs: &DofMap1D, re: &ReferenceElement) -> Result<Vec<f64>> {
    let w = re.interior_gauss_weights()?;
    Ok((0..dofs.n_elements())
        .map(|k| {
            w.iter()
                .enumerate()
                .map(|(i, wi)| 0.5 * wi * u[dofs.global(k, i + 1)])
                .sum()
        })
        .collect())
}

/// `|Σ ū(T) − Σ ū(0)| / |Σ ū(0)|` (absolute if the initial total vanishes).
pub fn conservation_drift(initial: &[f64], fin: &[f64]) -> f64 {
    let a: f64 = initial.iter().sum();
    let b: f64 = fin.iter().sum();
    if a != 0.0 {
        ((b - a) / a).abs()
    } else {
        (b - a).abs()
    }
}

/// `du/dt = −A u`.
pub struct LinearSystem {
    pub op: CsrMatrix,
}

impl SemiDiscreteSystem for LinearSystem {
    fn dim(&self) -> usize {
        self.op.n_rows()
    }

    fn rhs(&self, _t: f64, u: &[f64]) -> Result<Vec<f64>> {
        Ok(self.op.mul_vec(u).into_iter().map(|v| -v).collect())
    }

    fn rhs_jacobian(&self, _t: f64, _u: &[f64]) -> Result<CsrMatrix> {
        Ok(self.op.scaled(-1.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchCase {
    Advection1d,
    Poisson1d,
    Euler1d,
    Advection2d,
    Advection2dPerturbed,
    PoissonCircle,
    TaylorGreen,
}

impl BenchCase {
    pub const ALL: [BenchCase; 7] = [
        BenchCase::Advection1d,
        BenchCase::Poisson1d,
        BenchCase::Euler1d,
        BenchCase::Advection2d,
        BenchCase::Advection2dPerturbed,
        BenchCase::PoissonCircle,
        BenchCase::TaylorGreen,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchCase::Advection1d => "advection1d",
            BenchCase::Poisson1d => "poisson1d",
            BenchCase::Euler1d => "euler1d",
            BenchCase::Advection2d => "advection2d",
            BenchCase::Advection2dPerturbed => "advection2d-perturbed",
            BenchCase::PoissonCircle => "poisson-circle",
            BenchCase::TaylorGreen => "taylor-green",
        }
    }

    /// Levels swept when none are given.
    pub fn default_levels(self) -> Vec<usize> {
        match self {
            BenchCase::TaylorGreen => vec![0, 1, 2],
            _ => vec![0, 1, 2, 3],
        }
    }

    pub fn default_degree(self) -> usize {
        3
    }

    /// Element count per direction (1D and Taylor-Green) at a level.
    pub fn elements_at(self, level: usize) -> usize {
        match self {
            BenchCase::Advection1d | BenchCase::Poisson1d | BenchCase::Euler1d => 8 << level,
            _ => 4 << level,
        }
    }

    pub fn is_time_dependent(self) -> bool {
        !matches!(self, BenchCase::Poisson1d | BenchCase::PoissonCircle)
    }
}

impl fmt::Display for BenchCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchCase {
    type Err = FuseError;

    fn from_str(s: &str) -> Result<Self> {
        BenchCase::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| {
                let names: Vec<&str> = BenchCase::ALL.iter().map(|c| c.name()).collect();
                FuseError::Config(format!("unknown case `{s}` (expected one of {})", names.join(", ")))
            })
    }
}

/// Settings of a convergence sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepOptions {
    pub p: usize,
    pub levels: Vec<usize>,
    /// Fixed step; `None` applies the halving rule on the finest level.
    pub dt: Option<f64>,
    pub t_final: Option<f64>,
    pub seed: u64,
    pub spectral_radius: bool,
}

impl SweepOptions {
    pub fn new(case: BenchCase, p: usize) -> Self {
        SweepOptions {
            p,
            levels: case.default_levels(),
            dt: None,
            t_final: None,
            seed: DEFAULT_SEED,
            spectral_radius: true,
        }
    }
}

/// One row of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelResult {
    pub level: usize,
    pub n_elements: usize,
    pub dofs: usize,
    pub errors: Vec<f64>,
    pub spectral_radius: Option<f64>,
    pub wall_time_s: f64,
    pub dt: Option<f64>,
    pub conservation_drift: Option<f64>,
    pub max_newton_iterations: Option<usize>,
}

/// Outcome of the dt-halving rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DtChoice {
    pub dt: f64,
    /// Richardson estimate of the temporal error at `dt`.
    pub temporal_error: f64,
    /// Error of the `dt/2` solution against the exact one.
    pub spatial_error: f64,
    pub halvings: usize,
}

/// Largest `dt = dt0 / 2^k` whose temporal error is within
/// [`TEMPORAL_FRACTION`] of the spatial error. `solve(dt)` returns the
/// solution and its relative error against the exact solution; `order` is the
/// time integrator's order. Unstable steps (errors reported as non-finite or
/// as a non-finite state) are halved as well.
pub fn choose_dt<T>(
    dt0: f64,
    order: u32,
    max_halvings: usize,
    mut solve: impl FnMut(f64) -> Result<(Vec<f64>, f64, T)>,
) -> Result<(DtChoice, T)> {
    let richardson = 2f64.powi(order as i32) / (2f64.powi(order as i32) - 1.0);
    let mut dt = dt0;
    let mut cur = attempt(&mut solve, dt)?;
    for k in 0..=max_halvings {
        let half = attempt(&mut solve, 0.5 * dt)?;
        if let (Some((u, _, extra)), Some((uh, eh, _))) = (cur, half.as_ref()) {
            let scale = uh.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
            let diff = u.iter().zip(uh).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            let temporal = richardson * diff / scale;
            if temporal <= TEMPORAL_FRACTION * eh {
                return Ok((
                    DtChoice {
                        dt,
                        temporal_error: temporal,
                        spatial_error: *eh,
                        halvings: k,
                    },
                    extra,
                ));
            }
        }
        cur = half;
        dt *= 0.5;
    }
    Err(FuseError::Numerical(format!(
        "dt-halving rule did not settle after {max_halvings} halvings from dt={dt0}"
    )))
}

fn attempt<T>(
    solve: &mut impl FnMut(f64) -> Result<(Vec<f64>, f64, T)>,
    dt: f64,
) -> Result<Option<(Vec<f64>, f64, T)>> {
    match solve(dt) {
        Ok(r) if r.1.is_finite() && r.0.iter().all(|v| v.is_finite()) => Ok(Some(r)),
        Ok(_) | Err(FuseError::NonFinite { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Nodal fields of one run, for solution output.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Snapshot {
    /// Dof coordinates (`y = 0` in 1D).
    pub coords: Vec<Vec2>,
    pub fields: Vec<(String, Vec<f64>)>,
}

impl Snapshot {
    pub fn new(coords: Vec<Vec2>) -> Self {
        Snapshot { coords, fields: Vec::new() }
    }

    pub fn from_1d(x: &[f64]) -> Self {
        Snapshot::new(x.iter().map(|&x| [x, 0.0]).collect())
    }

    pub fn with(mut self, name: &str, values: Vec<f64>) -> Self {
        self.fields.push((name.to_string(), values));
        self
    }

    /// The first field, used by the dt-halving rule.
    pub fn primary(&self) -> &[f64] {
        self.fields.first().map(|f| f.1.as_slice()).unwrap_or(&[])
    }
}

/// Results of a convergence sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub case: BenchCase,
    pub p: usize,
    pub seed: u64,
    pub error_names: Vec<String>,
    pub levels: Vec<LevelResult>,
    pub dt_choice: Option<DtChoice>,
}

impl ConvergenceReport {
    pub fn error_index(&self, name: &str) -> Option<usize> {
        self.error_names.iter().position(|n| n == name)
    }

    /// Observed order of error `idx` between each level and the previous one.
    pub fn orders(&self, idx: usize) -> Vec<Option<f64>> {
        let mut out = vec![None];
        for w in self.levels.windows(2) {
            let ok = w[1].level == w[0].level + 1;
            out.push(if ok { observed_order(w[0].errors[idx], w[1].errors[idx]).ok() } else { None });
        }
        out
    }

    /// Order over the last pair of levels.
    pub fn last_order(&self, name: &str) -> Option<f64> {
        let idx = self.error_index(name)?;
        self.orders(idx).last().copied().flatten()
    }

    /// Ratios of successive spectral radii.
    pub fn radius_ratios(&self) -> Vec<f64> {
        self.levels
            .windows(2)
            .filter_map(|w| Some(w[1].spectral_radius? / w[0].spectral_radius?))
            .collect()
    }

    pub fn csv_header(&self) -> String {
        let mut cols = vec!["case".to_string(), "p".into(), "level".into(), "elements".into(), "dofs".into()];
        cols.extend(self.error_names.iter().map(|n| format!("error_{n}")));
        cols.push("spectral_radius".into());
        cols.extend(self.error_names.iter().map(|n| format!("observed_order_{n}")));
        cols.extend(["dt".into(), "conservation_drift".into(), "wall_time_s".into(), "seed".into()]);
        cols.join(",")
    }

    /// Data rows (no header), numbers with 17 significant digits.
    pub fn csv_rows(&self) -> Vec<String> {
        let orders: Vec<Vec<Option<f64>>> = (0..self.error_names.len()).map(|i| self.orders(i)).collect();
        self.levels
            .iter()
            .enumerate()
            .map(|(r, l)| {
                let mut cols = vec![
                    self.case.name().to_string(),
                    self.p.to_string(),
                    l.level.to_string(),
                    l.n_elements.to_string(),
                    l.dofs.to_string(),
                ];
                cols.extend(l.errors.iter().map(|e| fmt_real(*e)));
                cols.push(l.spectral_radius.map(fmt_real).unwrap_or_default());
                cols.extend(orders.iter().map(|o| o[r].map(fmt_real).unwrap_or_default()));
                cols.push(l.dt.map(fmt_real).unwrap_or_default());
                cols.push(l.conservation_drift.map(fmt_real).unwrap_or_default());
                cols.push(fmt_real(l.wall_time_s));
                cols.push(self.seed.to_string());
                cols.join(",")
            })
            .collect()
    }
}

/// Shortest round-trip-safe form with 17 significant digits.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Runs a sweep for any case.
pub fn run_sweep(case: BenchCase, opts: &SweepOptions) -> Result<ConvergenceReport> {
    Ok(run_sweep_with_solution(case, opts)?.0)
}

/// As [`run_sweep`], also returning the nodal fields of the finest level.
pub fn run_sweep_with_solution(case: BenchCase, opts: &SweepOptions) -> Result<(ConvergenceReport, Snapshot)> {
    if opts.levels.is_empty() {
        return Err(FuseError::Config("at least one level is required".into()));
    }
    if let Some(dt) = opts.dt {
        if !(dt > 0.0) {
            return Err(FuseError::Config(format!("dt must be positive, got {dt}")));
        }
    }
    if let Some(t) = opts.t_final {
        if !(t > 0.0) {
            return Err(FuseError::Config(format!("t_final must be positive, got {t}")));
        }
    }
    match case {
        BenchCase::Advection1d => one_d::sweep_advection_1d(opts),
        BenchCase::Poisson1d => one_d::sweep_poisson_1d(opts),
        BenchCase::Euler1d => one_d::sweep_euler_1d(opts),
        BenchCase::Advection2d => two_d::sweep_advection_2d(MeshKind::Structured, opts),
        BenchCase::Advection2dPerturbed => two_d::sweep_advection_2d(MeshKind::Perturbed, opts),
        BenchCase::PoissonCircle => two_d::sweep_poisson_circle(opts),
        BenchCase::TaylorGreen => taylor_green::sweep_taylor_green(opts),
    }
}

/// Runs every level, computing the finest one through the halving rule when
/// no fixed step is given. `level_fn(level, dt)` returns the row and the
/// final fields; the first field drives the halving rule. Errors carry the
/// failing level.
pub(crate) fn sweep_levels(
    opts: &SweepOptions,
    time_order: Option<(u32, f64)>,
    mut level_fn: impl FnMut(usize, Option<f64>) -> Result<(LevelResult, Snapshot)>,
) -> Result<(Vec<LevelResult>, Option<DtChoice>, Snapshot)> {
    let mut levels = opts.levels.clone();
    levels.sort_unstable();
    levels.dedup();
    let finest = *levels.last().unwrap();
    let mut choice = None;
    let mut finest_run = None;
    let dt = match (time_order, opts.dt) {
        (None, _) => None,
        (Some(_), Some(dt)) => Some(dt),
        (Some((order, dt0)), None) => {
            let (c, run) = choose_dt(dt0, order, 16, |dt| {
                let (row, snap) = level_fn(finest, Some(dt))?;
                let e = row.errors[0];
                Ok((snap.primary().to_vec(), e, (row, snap)))
            })
            .map_err(|e| e.at_level(finest))?;
            choice = Some(c);
            finest_run = Some(run);
            Some(c.dt)
        }
    };
    let mut out = Vec::with_capacity(levels.len());
    let mut last = Snapshot::default();
    for &l in &levels {
        if l == finest {
            if let Some((row, snap)) = finest_run.take() {
                out.push(row);
                last = snap;
                continue;
            }
        }
        let (row, snap) = level_fn(l, dt).map_err(|e| e.at_level(l))?;
        out.push(row);
        last = snap;
    }
    Ok((out, choice, last))
}

pub(crate) fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let v = f()?;
    Ok((v, start.elapsed().as_secs_f64()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Mesh1D;
    use crate::refelem::NodeKind;

    #[test]
    fn order_of_exact_power_law() {
        assert!((observed_order(1.6e-3, 1e-4).unwrap() - 4.0).abs() < 1e-12);
        assert_eq!(observed_order(1.0, 1.0).unwrap(), 0.0);
        let synth: Vec<f64> = (0..4).map(|i| 3.0 * 2f64.powf(-3.5 * i as f64)).collect();
        assert!(observed_orders(&synth).unwrap().iter().all(|o| (o - 3.5).abs() < 1e-12));
        assert!(observed_order(0.0, 1.0).is_err());
        assert!(observed_orders(&[1.0]).is_err());
        assert_eq!(relative_linf_error(&[1.0, 2.0], &[1.0, 2.5]).unwrap(), 0.2);
        assert!((relative_linf_error(&[1.0, 1.01], &[1.0, 1.0]).unwrap() - 0.01).abs() < 1e-15);
        assert!(relative_linf_error(&[1.0], &[0.0]).is_err());
    }

    #[test]
    fn cell_averages_of_polynomial() {
        let mesh = Mesh1D::uniform(4, (0.0, 1.0), true).unwrap();
        let re = ReferenceElement::build(NodeKind::GaussLegendrePlusEndpoints, 3).unwrap();
        let dofs = mesh.dofs(&re.nodes);
        let u: Vec<f64> = dofs.coords().iter().map(|x| x * x).collect();
        let avg = cell_averages(&u, &dofs, &re).unwrap();
        for (k, a) in avg.iter().enumerate() {
            let (l, r) = (k as f64 * 0.25, (k + 1) as f64 * 0.25);
            assert!((a - (r.powi(3) - l.powi(3)) / 3.0 / 0.25).abs() < 1e-14);
        }
    }

    #[test]
    fn dt_rule_halves_until_within_fraction() {
        // error model: spatial 1e-3, temporal 10·dt^4
        let (c, _) = choose_dt(1.0, 4, 30, |dt| {
            let u = vec![1.0 + 10.0 * dt.powi(4)];
            Ok((u, 1e-3, ()))
        })
        .unwrap();
        let bound = TEMPORAL_FRACTION * 1e-3;
        assert!(c.temporal_error <= bound);
        assert!(10.0 * (2.0 * c.dt).powi(4) > bound);
    }

    #[test]
    fn case_names_round_trip() {
        for c in BenchCase::ALL {
            assert_eq!(c.name().parse::<BenchCase>().unwrap(), c);
        }
        assert!("nope".parse::<BenchCase>().is_err());
    }
}
