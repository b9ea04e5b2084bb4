//! Von Neumann analysis of FUSE operators on uniform periodic meshes.

mod eigen;

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;

pub use eigen::{eigen_dense, eigen_dense_with_vectors};

use crate::error::{FuseError, Result};
use crate::mesh::Mesh1D;
use crate::ops::{assemble_first_derivative_1d, assemble_laplacian_1d, VelocityField};
use crate::refelem::{NodeKind, NodeSet, ReferenceElement};
use crate::sparse::CsrMatrix;

/// Stability threshold on the minimum real part at unit element width.
pub const TOL_STAB: f64 = 1e-10;

/// Default number of wavenumber samples.
pub const DEFAULT_SAMPLES: usize = 1024;

/// Which periodic operator a symbol describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymbolOperator {
    /// Upwinded first derivative with `a = +1`; generator `A` of `u_t + A u = 0`.
    First,
    /// Split Laplacian `L = A⁻A⁺`; generator `−L` of `u_t = L u`.
    Laplacian,
}

impl SymbolOperator {
    pub fn name(self) -> &'static str {
        match self {
            SymbolOperator::First => "first",
            SymbolOperator::Laplacian => "laplacian",
        }
    }
}

impl fmt::Display for SymbolOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SymbolOperator {
    type Err = FuseError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(SymbolOperator::First),
            "laplacian" | "second" => Ok(SymbolOperator::Laplacian),
            _ => Err(FuseError::InvalidArgument(format!(
                "unknown operator '{s}' (expected first or laplacian)"
            ))),
        }
    }
}

/// `A U_k = Σ_m B_m U_{k+m}` with `U_k = (u(s_1,k), …, u(s_p,k))`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolBlocks {
    pub p: usize,
    /// Element width.
    pub h: f64,
    /// `(offset m, p×p block)`, sorted by offset.
    pub blocks: Vec<(i64, Vec<Vec<f64>>)>,
}

impl SymbolBlocks {
    pub fn offsets(&self) -> Vec<i64> {
        self.blocks.iter().map(|b| b.0).collect()
    }

    pub fn block(&self, m: i64) -> Option<&Vec<Vec<f64>>> {
        self.blocks.iter().find(|b| b.0 == m).map(|b| &b.1)
    }

    /// `S(θ) = Σ_m B_m e^{i m θ}` with `θ = ξ·h` the phase shift per element.
    pub fn evaluate(&self, theta: f64) -> Vec<Vec<Complex64>> {
        let p = self.p;
        let mut s = vec![vec![Complex64::new(0.0, 0.0); p]; p];
        for (m, b) in &self.blocks {
            let ph = Complex64::from_polar(1.0, *m as f64 * theta);
            for i in 0..p {
                for j in 0..p {
                    s[i][j] += b[i][j] * ph;
                }
            }
        }
        s
    }

    /// Block convolution, the symbol of the operator product `self · other`.
    pub fn compose(&self, other: &SymbolBlocks) -> SymbolBlocks {
        let p = self.p;
        let mut out: Vec<(i64, Vec<Vec<f64>>)> = Vec::new();
        for (ma, a) in &self.blocks {
            for (mb, b) in &other.blocks {
                let m = ma + mb;
                let idx = match out.iter().position(|x| x.0 == m) {
                    Some(i) => i,
                    None => {
                        out.push((m, vec![vec![0.0; p]; p]));
                        out.len() - 1
                    }
                };
                for i in 0..p {
                    for j in 0..p {
                        out[idx].1[i][j] += (0..p).map(|k| a[i][k] * b[k][j]).sum::<f64>();
                    }
                }
            }
        }
        out.retain(|(_, b)| b.iter().flatten().any(|v| *v != 0.0));
        out.sort_by_key(|b| b.0);
        SymbolBlocks { p, h: self.h, blocks: out }
    }
}

const EXTRACT_ELEMENTS: usize = 7;

/// Reads the blocks of the middle element of an assembled periodic operator.
fn extract_blocks(op: &CsrMatrix, p: usize, n: usize, h: f64) -> SymbolBlocks {
    let k = n / 2;
    let total = n * p;
    let mut out: Vec<(i64, Vec<Vec<f64>>)> = Vec::new();
    for i in 0..p {
        let row = (k * p + i + 1) % total;
        for (c, v) in op.row(row) {
            // column c is node j+1 of element m
            let cm = (c + total - 1) % total;
            let (m, j) = (cm / p, cm % p);
            let mut off = m as i64 - k as i64;
            let half = n as i64 / 2;
            if off > half {
                off -= n as i64;
            } else if off < -half {
                off += n as i64;
            }
            let idx = match out.iter().position(|b| b.0 == off) {
                Some(x) => x,
                None => {
                    out.push((off, vec![vec![0.0; p]; p]));
                    out.len() - 1
                }
            };
            out[idx].1[i][j] += v;
        }
    }
    out.sort_by_key(|b| b.0);
    SymbolBlocks { p, h, blocks: out }
}

fn periodic_setup(nodes: &NodeSet, h: f64) -> Result<(Mesh1D, ReferenceElement)> {
    if !(h > 0.0) {
        return Err(FuseError::InvalidArgument(format!("element width must be positive, got {h}")));
    }
    let n = EXTRACT_ELEMENTS;
    let mesh = Mesh1D::uniform(n, (0.0, n as f64 * h), true)?;
    Ok((mesh, ReferenceElement::new(nodes.clone())))
}

/// Symbol of the upwinded first derivative (`a = +1`) for elements of width `h`.
pub fn first_derivative_symbol(nodes: &NodeSet, h: f64) -> Result<SymbolBlocks> {
    let (mesh, re) = periodic_setup(nodes, h)?;
    let op = assemble_first_derivative_1d(&mesh, &re, &VelocityField::constant_1d(1.0))?;
    Ok(extract_blocks(&op, nodes.degree(), mesh.n_elements(), h))
}

/// Symbol of the split Laplacian `A⁻A⁺` (split velocity `+1`).
pub fn laplacian_symbol(nodes: &NodeSet, h: f64) -> Result<SymbolBlocks> {
    let (mesh, re) = periodic_setup(nodes, h)?;
    let op = assemble_laplacian_1d(&mesh, &re, 1.0)?;
    Ok(extract_blocks(&op, nodes.degree(), mesh.n_elements(), h))
}

/// Eigenvalues of a symbol at every sample, plus summary.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumScan {
    pub xi: Vec<f64>,
    pub eigenvalues: Vec<Vec<Complex64>>,
    pub min_real_part: f64,
    pub spectral_radius: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityVerdict {
    pub kind: NodeKind,
    pub p: usize,
    pub operator: SymbolOperator,
    pub stable: bool,
    pub min_real_part: f64,
    pub worst_xi: f64,
}

impl fmt::Display for StabilityVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} p={} {}: {} (min Re = {:.6e} at xi = {:.6})",
            self.kind,
            self.p,
            self.operator,
            if self.stable { "stable" } else { "unstable" },
            self.min_real_part,
            self.worst_xi
        )
    }
}

/// Generator symbol for `u_t + G u = 0` at unit element width.
pub fn generator_symbol(nodes: &NodeSet, op: SymbolOperator) -> Result<SymbolBlocks> {
    match op {
        SymbolOperator::First => first_derivative_symbol(nodes, 1.0),
        SymbolOperator::Laplacian => {
            let mut s = laplacian_symbol(nodes, 1.0)?;
            for (_, b) in s.blocks.iter_mut() {
                for v in b.iter_mut().flatten() {
                    *v = -*v;
                }
            }
            Ok(s)
        }
    }
}

fn min_real(sym: &SymbolBlocks, theta: f64) -> Result<f64> {
    Ok(eigen_dense(&sym.evaluate(theta))?
        .iter()
        .fold(f64::INFINITY, |m, l| m.min(l.re)))
}

/// Samples the generator symbol at `ξ_j = 2πj / n_samples` (`h = 1`) and
/// refines the worst sample by golden-section search.
pub fn scan_stability(
    kind: NodeKind,
    p: usize,
    op: SymbolOperator,
    n_samples: usize,
) -> Result<(SpectrumScan, StabilityVerdict)> {
    if n_samples < 256 {
        return Err(FuseError::InvalidArgument(format!(
            "at least 256 samples required, got {n_samples}"
        )));
    }
    let nodes = NodeSet::new(kind, p)?;
    let sym = generator_symbol(&nodes, op)?;
    let xi: Vec<f64> = (0..n_samples).map(|j| 2.0 * PI * j as f64 / n_samples as f64).collect();
    let eigenvalues = xi
        .par_iter()
        .map(|&t| eigen_dense(&sym.evaluate(t)))
        .collect::<Result<Vec<_>>>()?;
    let mut min_re = f64::INFINITY;
    let mut worst = 0usize;
    let mut radius: f64 = 0.0;
    for (j, ls) in eigenvalues.iter().enumerate() {
        for l in ls {
            radius = radius.max(l.norm());
            if l.re < min_re {
                min_re = l.re;
                worst = j;
            }
        }
    }
    let step = 2.0 * PI / n_samples as f64;
    let (mut a, mut b) = (xi[worst] - step, xi[worst] + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = min_real(&sym, c)?;
    let mut fd = min_real(&sym, d)?;
    for _ in 0..60 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = min_real(&sym, c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = min_real(&sym, d)?;
        }
    }
    let (mut worst_xi, mut worst_val) = (xi[worst], min_re);
    for (t, v) in [(c, fc), (d, fd)] {
        if v < worst_val {
            worst_val = v;
            worst_xi = t.rem_euclid(2.0 * PI);
        }
    }
    let verdict = StabilityVerdict {
        kind,
        p,
        operator: op,
        stable: worst_val >= -TOL_STAB,
        min_real_part: worst_val,
        worst_xi,
    };
    let scan = SpectrumScan {
        xi,
        eigenvalues,
        min_real_part: min_re,
        spectral_radius: radius,
    };
    Ok((scan, verdict))
}

/// Dense eigenvalues of a sparse operator.
pub fn operator_eigenvalues(op: &CsrMatrix) -> Result<Vec<Complex64>> {
    if !op.is_square() {
        return Err(FuseError::InvalidArgument("eigenvalues need a square operator".into()));
    }
    let m: Vec<Vec<Complex64>> = op
        .to_dense()
        .into_iter()
        .map(|r| r.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
        .collect();
    eigen_dense(&m)
}

/// Size up to which the spectral radius uses the dense eigensolver.
pub const DENSE_RADIUS_LIMIT: usize = 2000;

/// `max |λ|`: dense for `n ≤ 2000`, otherwise power iteration with a
/// two-dimensional Krylov (Rayleigh-Ritz) estimate so that a dominant complex
/// pair of a real operator is resolved.
pub fn operator_spectral_radius(op: &CsrMatrix) -> Result<f64> {
    if !op.is_square() {
        return Err(FuseError::InvalidArgument("spectral radius needs a square operator".into()));
    }
    if op.n_rows() <= DENSE_RADIUS_LIMIT {
        return Ok(operator_eigenvalues(op)?.iter().fold(0.0, |m, l| m.max(l.norm())));
    }
    power_radius(op, 1e-6, 200_000)
}

pub(crate) fn power_radius(op: &CsrMatrix, tol: f64, max_iter: usize) -> Result<f64> {
    let n = op.n_rows();
    // deterministic, non-symmetric start vector
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 104729) as f64 / 104729.0).collect();
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nx = norm(&x);
    x.iter_mut().for_each(|v| *v /= nx);
    let mut prev = f64::NAN;
    let mut stable_count = 0;
    let mut history = Vec::new();
    for it in 0..max_iter {
        let y = op.mul_vec(&x);
        let z = op.mul_vec(&y);
        // least squares z ≈ −c1 y − c0 x
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
        let (xx, xy, yy) = (dot(&x, &x), dot(&x, &y), dot(&y, &y));
        let (zx, zy) = (dot(&z, &x), dot(&z, &y));
        let det = xx * yy - xy * xy;
        let est = if det.abs() > 1e-14 * xx * yy {
            let c0 = -(zx * yy - zy * xy) / det;
            let c1 = -(zy * xx - zx * xy) / det;
            let disc = Complex64::new(c1 * c1 - 4.0 * c0, 0.0).sqrt();
            let r1 = (-c1 + disc) / 2.0;
            let r2 = (-c1 - disc) / 2.0;
            r1.norm().max(r2.norm())
        } else {
            norm(&y)
        };
        history.push(est);
        if (est - prev).abs() <= tol * est {
            stable_count += 1;
            if stable_count >= 5 {
                return Ok(est);
            }
        } else {
            stable_count = 0;
        }
        prev = est;
        let nz = norm(&z);
        if nz == 0.0 {
            return Ok(0.0);
        }
        if !nz.is_finite() {
            return Err(FuseError::Numerical(format!("power iteration overflow at step {it}")));
        }
        x = z.into_iter().map(|v| v / nz).collect();
    }
    let tail: Vec<String> = history.iter().rev().take(5).map(|v| format!("{v:.6e}")).collect();
    Err(FuseError::Numerical(format!(
        "power iteration stagnated after {max_iter} steps; last estimates {}",
        tail.join(", ")
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-13 * (1.0 + b.abs())
    }

    #[test]
    fn first_symbol_offsets_and_rank() {
        for kind in NodeKind::ALL {
            for p in 2..=5 {
                let s = first_derivative_symbol(&NodeSet::new(kind, p).unwrap(), 1.0).unwrap();
                assert_eq!(s.offsets(), vec![-1, 0]);
                let b = s.block(-1).unwrap();
                for row in b {
                    assert!(row[..p - 1].iter().all(|v| *v == 0.0));
                }
                // consistency at θ = 0
                for row in s.evaluate(0.0) {
                    assert!(row.iter().sum::<Complex64>().norm() < 1e-11);
                }
            }
        }
    }

    #[test]
    fn p2_uniform_blocks() {
        let h = 0.5;
        let s = first_derivative_symbol(&NodeSet::new(NodeKind::Uniform, 2).unwrap(), 2.0 * h).unwrap();
        let a0 = s.block(0).unwrap();
        let a1 = s.block(-1).unwrap();
        let want0 = [[0.0, 1.0 / (2.0 * h)], [-2.0 / h, 3.0 / (2.0 * h)]];
        let want1 = [[0.0, -1.0 / (2.0 * h)], [0.0, 1.0 / (2.0 * h)]];
        for i in 0..2 {
            for j in 0..2 {
                assert!(close(a0[i][j], want0[i][j]));
                assert!(close(a1[i][j], want1[i][j]));
            }
        }
    }

    #[test]
    fn laplacian_symbol_is_product() {
        let nodes = NodeSet::fuse(3).unwrap();
        let plus = first_derivative_symbol(&nodes, 1.0).unwrap();
        let (mesh, re) = periodic_setup(&nodes, 1.0).unwrap();
        let minus_op = assemble_first_derivative_1d(&mesh, &re, &VelocityField::constant_1d(-1.0)).unwrap();
        let minus = extract_blocks(&minus_op, 3, mesh.n_elements(), 1.0);
        let lap = laplacian_symbol(&nodes, 1.0).unwrap();
        assert_eq!(lap.offsets(), vec![-2, -1, 0, 1]);
        for t in [0.0, 0.3, 1.7, 4.0] {
            let a = lap.evaluate(t);
            let pm = minus.compose(&plus).evaluate(t);
            let (m, pl) = (minus.evaluate(t), plus.evaluate(t));
            for i in 0..3 {
                for j in 0..3 {
                    let prod: Complex64 = (0..3).map(|k| m[i][k] * pl[k][j]).sum();
                    assert!((a[i][j] - prod).norm() < 1e-12);
                    assert!((a[i][j] - pm[i][j]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn spectral_radius_small() {
        let d = CsrMatrix::diagonal(&[1.0, -3.0, 2.0]);
        assert!((operator_spectral_radius(&d).unwrap() - 3.0).abs() < 1e-14);
        // rotation-like block has a dominant complex pair
        let m = CsrMatrix::from_dense(&[
            vec![0.0, 2.0, 0.0],
            vec![-2.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        assert!((power_radius(&m, 1e-10, 1000).unwrap() - 2.0).abs() < 1e-8);
    }

    #[test]
    fn gl_endpoints_p3_stable_uniform_p3_unstable() {
        let (_, v) = scan_stability(NodeKind::GaussLegendrePlusEndpoints, 3, SymbolOperator::First, 256).unwrap();
        assert!(v.stable, "{v}");
        let (_, v) = scan_stability(NodeKind::Uniform, 3, SymbolOperator::First, 256).unwrap();
        assert!(!v.stable, "{v}");
    }
}
