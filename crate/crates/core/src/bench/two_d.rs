//! 2D benchmarks: rotating advection on the square and Poisson on the disk.

use std::fmt;

use super::{
    relative_linf_error, sweep_levels, timed, BenchCase, ConvergenceReport, LevelResult, LinearSystem, Snapshot,
    SweepOptions,
};
use crate::error::{FuseError, Result};
use crate::mesh::{circle_mesh, perturbed_mesh, structured_mesh, QuadMesh, Rect};
use crate::ops::{impose_dirichlet, Space2D, VelocityField};
use crate::refelem::{NodeKind, ReferenceElement};
use crate::sparse::{sparse_lu_solve, CsrMatrix};
use crate::timeloop::{integrate, IntegratorConfig};
use crate::vnstab::{operator_eigenvalues, operator_spectral_radius, DENSE_RADIUS_LIMIT};
use crate::Vec2;

const CFL: f64 = 0.5;
/// Geometry degree of the disk meshes.
const CIRCLE_P_GEO: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshKind {
    Structured,
    Perturbed,
}

impl fmt::Display for MeshKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeshKind::Structured => "structured",
            MeshKind::Perturbed => "perturbed",
        })
    }
}

fn element(p: usize) -> Result<ReferenceElement> {
    if p < 2 {
        return Err(FuseError::Config(format!("benchmarks need p >= 2, got {p}")));
    }
    ReferenceElement::build(NodeKind::GaussLegendrePlusEndpoints, p)
}

/// `4 × 4` mesh of `[−1, 1]²` refined `level` times.
pub fn advection_2d_mesh(kind: MeshKind, level: usize, seed: u64) -> Result<QuadMesh> {
    let dom = Rect::square(-1.0, 1.0);
    let mut mesh = match kind {
        MeshKind::Structured => structured_mesh(4, 4, dom, [false, false], 1)?,
        MeshKind::Perturbed => perturbed_mesh(4, dom, seed, 1)?,
    };
    for _ in 0..level {
        mesh = mesh.refine_uniform();
    }
    Ok(mesh)
}

fn rotation(x: Vec2) -> Vec2 {
    [-x[1], x[0]]
}

/// `exp(−20 ((x + 0.3)² + y²))`.
pub fn advection_2d_initial(x: Vec2) -> f64 {
    (-20.0 * ((x[0] + 0.3).powi(2) + x[1] * x[1])).exp()
}

/// Boundary dofs where the velocity points into the domain.
pub fn inflow_dofs(space: &Space2D, vel: impl Fn(Vec2) -> Vec2) -> Vec<usize> {
    let mesh = &space.mesh;
    let mut out = Vec::new();
    for (f, face) in mesh.faces().iter().enumerate() {
        if !face.is_boundary() {
            continue;
        }
        let (e, lf) = face.sides[0];
        for &g in space.dofs.face_dofs(f) {
            let Some(&(_, l)) = space.dofs.owners(g).iter().find(|(oe, _)| *oe == e) else {
                continue;
            };
            let x = space.dofs.coords()[g];
            let n = mesh.outward_normal(e, lf, space.dofs.local_ref_point(l));
            let a = vel(x);
            if a[0] * n[0] + a[1] * n[1] < -1e-12 * a[0].hypot(a[1]) {
                out.push(g);
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// `a · ∇` for the rotating field with the inflow rows zeroed, plus the inflow dofs.
pub fn advection_2d_operator(space: &Space2D) -> Result<(CsrMatrix, Vec<usize>)> {
    let vel = VelocityField::function(rotation);
    let [gx, gy] = space.gradient(&vel);
    let coords = space.dofs.coords();
    let ax: Vec<f64> = coords.iter().map(|&x| rotation(x)[0]).collect();
    let ay: Vec<f64> = coords.iter().map(|&x| rotation(x)[1]).collect();
    let op = gx.scale_rows(&ax).add_scaled(1.0, &gy.scale_rows(&ay), 1.0);
    let inflow = inflow_dofs(space, rotation);
    Ok((op.with_zero_rows(&inflow), inflow))
}

/// Gaussian rotated once around the origin with zero inflow, RK4.
pub(crate) fn sweep_advection_2d(kind: MeshKind, opts: &SweepOptions) -> Result<(ConvergenceReport, Snapshot)> {
    let case = match kind {
        MeshKind::Structured => BenchCase::Advection2d,
        MeshKind::Perturbed => BenchCase::Advection2dPerturbed,
    };
    let t_final = opts.t_final.unwrap_or(2.0 * std::f64::consts::PI);
    let re = element(opts.p)?;
    let finest = *opts.levels.iter().max().unwrap_or(&0);
    let u = re.nodes.unit_coords();
    let spacing = u.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    let shrink = if kind == MeshKind::Perturbed { 0.5 } else { 1.0 };
    let dt0 = CFL * shrink * spacing * 2.0 / case.elements_at(finest) as f64 / 2f64.sqrt();
    let (levels, dt_choice, snap) = sweep_levels(opts, Some((4, dt0)), |level, dt| {
        let ((row, snap), wall) = timed(|| {
            let mesh = advection_2d_mesh(kind, level, opts.seed)?;
            let n_el = mesh.n_elements();
            let space = Space2D::new(mesh, re.clone())?;
            let (op, inflow) = advection_2d_operator(&space)?;
            let exact = space.interpolate(advection_2d_initial);
            let mut u0 = exact.clone();
            for &g in &inflow {
                u0[g] = 0.0;
            }
            let radius = if opts.spectral_radius && op.n_rows() <= DENSE_RADIUS_LIMIT {
                Some(operator_spectral_radius(&op)?)
            } else {
                None
            };
            let sys = LinearSystem { op };
            let dt = dt.expect("time step");
            let (u, _, stats) = integrate(&sys, &u0, &[], &IntegratorConfig::rk4(dt, t_final), |_, _, _| {})?;
            let row = LevelResult {
                level,
                n_elements: n_el,
                dofs: space.n_dofs(),
                errors: vec![relative_linf_error(&u, &exact)?],
                spectral_radius: radius,
                wall_time_s: 0.0,
                dt: Some(stats.dt),
                conservation_drift: None,
                max_newton_iterations: None,
            };
            Ok((row, Snapshot::new(space.dofs.coords().to_vec()).with("u", u).with("exact", exact)))
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

/// `exp(1 − x² − y²)`.
pub fn circle_exact(x: Vec2) -> f64 {
    (1.0 - x[0] * x[0] - x[1] * x[1]).exp()
}

/// `−Δ` of [`circle_exact`].
pub fn circle_source(x: Vec2) -> f64 {
    let r2 = x[0] * x[0] + x[1] * x[1];
    (4.0 - 4.0 * r2) * (1.0 - r2).exp()
}

fn circle_space(p: usize, level: usize) -> Result<Space2D> {
    let mut mesh = circle_mesh(CIRCLE_P_GEO)?;
    for _ in 0..level {
        mesh = mesh.refine_uniform();
    }
    Space2D::new(mesh, element(p)?)
}

fn circle_system(
    space: &Space2D,
    seed: u64,
    exact: &dyn Fn(Vec2) -> f64,
    source: &dyn Fn(Vec2) -> f64,
) -> Result<(CsrMatrix, Vec<f64>)> {
    let split = crate::ops::random_split_velocity(seed);
    let k = space.laplacian(split).scaled(-1.0);
    let rhs = space.interpolate(source);
    let bnd = space.dofs.boundary_dofs(&space.mesh, |_, _| true);
    let vals: Vec<f64> = bnd.iter().map(|&g| exact(space.dofs.coords()[g])).collect();
    impose_dirichlet(&k, &rhs, &bnd, &vals)
}

/// Solves `−L u = f` on the disk mesh at `level` with Dirichlet data from
/// `exact`. Returns the space, the solution and the exact nodal values.
pub fn solve_poisson_circle(
    p: usize,
    level: usize,
    seed: u64,
    exact: impl Fn(Vec2) -> f64,
    source: impl Fn(Vec2) -> f64,
) -> Result<(Space2D, Vec<f64>, Vec<f64>)> {
    let space = circle_space(p, level)?;
    let (k, b) = circle_system(&space, seed, &exact, &source)?;
    let u = sparse_lu_solve(&k, &b)?;
    let ex = space.interpolate(exact);
    Ok((space, u, ex))
}

/// Smallest real part among the eigenvalues of `−L` on the disk mesh at
/// `level`, restricted to the interior dofs (the boundary rows are identity
/// rows after Dirichlet imposition and only contribute eigenvalue 1).
pub fn circle_laplacian_min_real_part(p: usize, level: usize, seed: u64) -> Result<f64> {
    let space = circle_space(p, level)?;
    let k = space.laplacian(crate::ops::random_split_velocity(seed)).scaled(-1.0).to_dense();
    let bnd = space.dofs.boundary_dofs(&space.mesh, |_, _| true);
    let interior: Vec<usize> = (0..space.n_dofs()).filter(|g| !bnd.contains(g)).collect();
    let sub: Vec<Vec<f64>> = interior
        .iter()
        .map(|&r| interior.iter().map(|&c| k[r][c]).collect())
        .collect();
    Ok(operator_eigenvalues(&CsrMatrix::from_dense(&sub))?
        .iter()
        .fold(f64::INFINITY, |m, l| m.min(l.re)))
}

/// `−Δu = f` on the unit disk with `u = exp(1 − x² − y²)`.
pub(crate) fn sweep_poisson_circle(opts: &SweepOptions) -> Result<(ConvergenceReport, Snapshot)> {
    let (levels, _, snap) = sweep_levels(opts, None, |level, _| {
        let ((row, snap), wall) = timed(|| {
            let space = circle_space(opts.p, level)?;
            let (k, b) = circle_system(&space, opts.seed, &circle_exact, &circle_source)?;
            let u = sparse_lu_solve(&k, &b)?;
            let exact = space.interpolate(circle_exact);
            let radius = if opts.spectral_radius && k.n_rows() <= DENSE_RADIUS_LIMIT {
                Some(operator_spectral_radius(&k)?)
            } else {
                None
            };
            let row = LevelResult {
                level,
                n_elements: space.mesh.n_elements(),
                dofs: space.n_dofs(),
                errors: vec![relative_linf_error(&u, &exact)?],
                spectral_radius: radius,
                wall_time_s: 0.0,
                dt: None,
                conservation_drift: None,
                max_newton_iterations: None,
            };
            Ok((row, Snapshot::new(space.dofs.coords().to_vec()).with("u", u).with("exact", exact)))
        })?;
        Ok((LevelResult { wall_time_s: wall, ..row }, snap))
    })?;
    let report = ConvergenceReport {
        case: BenchCase::PoissonCircle,
        p: opts.p,
        seed: opts.seed,
        error_names: vec!["u".into()],
        levels,
        dt_choice: None,
    };
    Ok((report, snap))
}
