//! Reference-interval machinery on `[-1, 1]`: node sets, Lagrange
//! interpolation, differentiation matrices and quadrature weights.

use std::fmt;
use std::str::FromStr;

use crate::error::{FuseError, Result};

const NEWTON_MAX_ITER: usize = 100;
const NEWTON_TOL: f64 = 1e-15;

/// Node distribution on the reference interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Uniform,
    GaussLobatto,
    /// Roots of `P_{p-1}` plus the two endpoints. The stable FUSE choice.
    GaussLegendrePlusEndpoints,
}

impl NodeKind {
    pub const ALL: [NodeKind; 3] = [
        NodeKind::Uniform,
        NodeKind::GaussLobatto,
        NodeKind::GaussLegendrePlusEndpoints,
    ];

    pub fn name(self) -> &'static str {
        match self {
            NodeKind::Uniform => "uniform",
            NodeKind::GaussLobatto => "gauss-lobatto",
            NodeKind::GaussLegendrePlusEndpoints => "gl-endpoints",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NodeKind {
    type Err = FuseError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(NodeKind::Uniform),
            "gauss-lobatto" | "lobatto" | "gll" => Ok(NodeKind::GaussLobatto),
            "gl-endpoints" | "gauss-legendre-endpoints" | "gle" => {
                Ok(NodeKind::GaussLegendrePlusEndpoints)
            }
            other => Err(FuseError::InvalidArgument(format!(
                "unknown node kind '{other}' (expected uniform, gauss-lobatto or gl-endpoints)"
            ))),
        }
    }
}

/// Legendre polynomial `P_n(x)` and its derivative via the three-term recurrence.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    let (mut d0, mut d1) = (0.0, 1.0);
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        let d2 = d0 + (2.0 * kf + 1.0) * p1;
        p0 = p1;
        p1 = p2;
        d0 = d1;
        d1 = d2;
    }
    (p1, d1)
}

/// Newton iteration for a single root; `f` returns `(value, derivative)`.
fn newton_root(mut x: f64, degree: usize, f: impl Fn(f64) -> (f64, f64)) -> Result<f64> {
    for _ in 0..NEWTON_MAX_ITER {
        let (v, d) = f(x);
        let dx = v / d;
        x -= dx;
        if dx.abs() <= NEWTON_TOL * x.abs().max(1.0) {
            return Ok(x);
        }
    }
    Err(FuseError::RootFinding {
        degree,
        iterations: NEWTON_MAX_ITER,
    })
}

/// Enforce exact odd symmetry on an ascending root list.
fn symmetrize(xs: &mut [f64]) {
    let n = xs.len();
    for i in 0..n / 2 {
        let a = 0.5 * (xs[n - 1 - i] - xs[i]);
        xs[i] = -a;
        xs[n - 1 - i] = a;
    }
    if n % 2 == 1 {
        xs[n / 2] = 0.0;
    }
}

/// Roots of `P_n` in ascending order.
///
/// Newton's method started from the Chebyshev points `-cos((2i+1)π/(2n))`.
pub fn gauss_legendre_nodes(n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(FuseError::InvalidArgument(
            "Gauss-Legendre rule needs at least one node".into(),
        ));
    }
    let mut xs = Vec::with_capacity(n);
    for i in 0..n {
        let guess = -((2 * i + 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos();
        xs.push(newton_root(guess, n, |x| legendre(n, x))?);
    }
    symmetrize(&mut xs);
    Ok(xs)
}

/// Gauss-Legendre nodes and weights `2 / ((1 - x²) P_n'(x)²)`.
pub fn gauss_legendre(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let xs = gauss_legendre_nodes(n)?;
    let ws = xs
        .iter()
        .map(|&x| {
            let (_, d) = legendre(n, x);
            2.0 / ((1.0 - x * x) * d * d)
        })
        .collect();
    Ok((xs, ws))
}

/// Interior Gauss-Lobatto nodes: the roots of `P_p'`.
fn lobatto_interior(p: usize) -> Result<Vec<f64>> {
    let pf = p as f64;
    let mut xs = Vec::with_capacity(p.saturating_sub(1));
    for i in 1..p {
        let guess = -(i as f64 * std::f64::consts::PI / pf).cos();
        // (1 - x²) P'' = 2x P' - p(p+1) P
        let root = newton_root(guess, p, |x| {
            let (v, d) = legendre(p, x);
            let dd = (2.0 * x * d - pf * (pf + 1.0) * v) / (1.0 - x * x);
            (d, dd)
        })?;
        xs.push(root);
    }
    symmetrize(&mut xs);
    Ok(xs)
}

/// Ordered 1D node distribution of `p + 1` points with exact `±1` endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet {
    kind: NodeKind,
    coords: Vec<f64>,
}

impl NodeSet {
    pub fn new(kind: NodeKind, p: usize) -> Result<Self> {
        if p == 0 {
            return Err(FuseError::InvalidArgument("degree p must be at least 1".into()));
        }
        let interior = match kind {
            NodeKind::Uniform => (1..p).map(|i| -1.0 + 2.0 * i as f64 / p as f64).collect(),
            NodeKind::GaussLobatto => lobatto_interior(p)?,
            NodeKind::GaussLegendrePlusEndpoints if p == 1 => Vec::new(),
            NodeKind::GaussLegendrePlusEndpoints => gauss_legendre_nodes(p - 1)?,
        };
        let mut coords = Vec::with_capacity(p + 1);
        coords.push(-1.0);
        coords.extend(interior);
        coords.push(1.0);
        if kind == NodeKind::Uniform {
            symmetrize(&mut coords[1..p]);
        }
        Ok(NodeSet { kind, coords })
    }

    /// Stable production node set.
    pub fn fuse(p: usize) -> Result<Self> {
        Self::new(NodeKind::GaussLegendrePlusEndpoints, p)
    }

    pub fn kind(&self) -> NodeKind {
        self.kind
    }

    pub fn degree(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Nodes affinely mapped to `[0, 1]`. Endpoints stay exact.
    pub fn unit_coords(&self) -> Vec<f64> {
        let p = self.degree();
        self.coords
            .iter()
            .enumerate()
            .map(|(i, &x)| match i {
                0 => 0.0,
                i if i == p => 1.0,
                _ => 0.5 * (x + 1.0),
            })
            .collect()
    }
}

/// Barycentric weights `1 / ∏_{k≠j} (x_j - x_k)`.
pub fn barycentric_weights(xs: &[f64]) -> Vec<f64> {
    (0..xs.len())
        .map(|j| {
            let prod: f64 = (0..xs.len())
                .filter(|&k| k != j)
                .map(|k| xs[j] - xs[k])
                .product();
            1.0 / prod
        })
        .collect()
}

/// Differentiation matrix `D[i][j] = φ_j'(x_i)` from barycentric weights,
/// diagonal by the negative-sum trick so rows annihilate constants.
pub fn diff_matrix_from_points(xs: &[f64]) -> Vec<Vec<f64>> {
    let n = xs.len();
    let lam = barycentric_weights(xs);
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = (lam[j] / lam[i]) / (xs[i] - xs[j]);
                d[i][j] = v;
                diag -= v;
            }
        }
        d[i][i] = diag;
    }
    d
}

pub fn lagrange_diff_matrix(nodes: &NodeSet) -> Vec<Vec<f64>> {
    diff_matrix_from_points(nodes.coords())
}

/// Lagrange basis values and first derivatives at an arbitrary point.
pub fn lagrange_basis(xs: &[f64], x: f64) -> (Vec<f64>, Vec<f64>) {
    let n = xs.len();
    let lam = barycentric_weights(xs);
    let mut vals = vec![0.0; n];
    let mut ders = vec![0.0; n];
    for j in 0..n {
        let mut v = lam[j];
        for k in 0..n {
            if k != j {
                v *= x - xs[k];
            }
        }
        vals[j] = v;
        let mut d = 0.0;
        for m in 0..n {
            if m == j {
                continue;
            }
            let mut t = lam[j];
            for k in 0..n {
                if k != j && k != m {
                    t *= x - xs[k];
                }
            }
            d += t;
        }
        ders[j] = d;
    }
    (vals, ders)
}

/// Barycentric (second form) evaluation of the interpolant through `coeffs`.
pub fn evaluate_lagrange(nodes: &NodeSet, coeffs: &[f64], x: f64) -> f64 {
    evaluate_lagrange_points(nodes.coords(), coeffs, x)
}

pub fn evaluate_lagrange_points(xs: &[f64], coeffs: &[f64], x: f64) -> f64 {
    let lam = barycentric_weights(xs);
    let mut num = 0.0;
    let mut den = 0.0;
    for (j, &xj) in xs.iter().enumerate() {
        let dx = x - xj;
        if dx == 0.0 {
            return coeffs[j];
        }
        let t = lam[j] / dx;
        num += t * coeffs[j];
        den += t;
    }
    num / den
}

/// `w_i = ∫_{-1}^{1} φ_i`, integrated with a `(p+1)`-point Gauss rule.
pub fn interpolatory_weights(nodes: &NodeSet) -> Vec<f64> {
    let n = nodes.len();
    let (gx, gw) = gauss_legendre(n).expect("Gauss-Legendre nodes for small n converge");
    let mut w = vec![0.0; n];
    for (x, wq) in gx.iter().zip(&gw) {
        let (vals, _) = lagrange_basis(nodes.coords(), *x);
        for (wi, v) in w.iter_mut().zip(vals) {
            *wi += wq * v;
        }
    }
    w
}

/// Node set with its differentiation matrix and quadrature data.
#[derive(Debug, Clone)]
pub struct ReferenceElement {
    pub nodes: NodeSet,
    /// `diff_matrix[i][j] = dφ_j/dξ` at node `i`, on `[-1, 1]`.
    pub diff_matrix: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub barycentric_weights: Vec<f64>,
}

impl ReferenceElement {
    pub fn new(nodes: NodeSet) -> Self {
        let diff_matrix = lagrange_diff_matrix(&nodes);
        let weights = interpolatory_weights(&nodes);
        let barycentric_weights = barycentric_weights(nodes.coords());
        ReferenceElement {
            nodes,
            diff_matrix,
            weights,
            barycentric_weights,
        }
    }

    pub fn build(kind: NodeKind, p: usize) -> Result<Self> {
        Ok(Self::new(NodeSet::new(kind, p)?))
    }

    pub fn degree(&self) -> usize {
        self.nodes.degree()
    }

    /// Differentiation matrix on the unit interval `[0, 1]`.
    pub fn unit_diff_matrix(&self) -> Vec<Vec<f64>> {
        self.diff_matrix
            .iter()
            .map(|row| row.iter().map(|v| 2.0 * v).collect())
            .collect()
    }

    /// True Gauss-Legendre weights of the `p - 1` interior nodes
    /// (only meaningful for [`NodeKind::GaussLegendrePlusEndpoints`]).
    pub fn interior_gauss_weights(&self) -> Result<Vec<f64>> {
        let p = self.degree();
        if p < 2 {
            return Err(FuseError::InvalidArgument(
                "no interior Gauss nodes for p < 2".into(),
            ));
        }
        Ok(gauss_legendre(p - 1)?.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn gauss_legendre_small_rules() {
        assert_eq!(gauss_legendre_nodes(1).unwrap(), vec![0.0]);
        let two = gauss_legendre_nodes(2).unwrap();
        let s = (1.0f64 / 3.0).sqrt();
        assert!(close(two[0], -s, 1e-15) && close(two[1], s, 1e-15));
        let three = gauss_legendre_nodes(3).unwrap();
        let s = (3.0f64 / 5.0).sqrt();
        assert!(close(three[0], -s, 1e-15));
        assert_eq!(three[1], 0.0);
        assert!(close(three[2], s, 1e-15));
        assert!(gauss_legendre_nodes(0).is_err());
    }

    #[test]
    fn gauss_legendre_residuals() {
        for n in 1..=12 {
            for x in gauss_legendre_nodes(n).unwrap() {
                assert!(legendre(n, x).0.abs() <= 1e-14, "n={n} x={x}");
            }
        }
        for n in 13..=40 {
            for x in gauss_legendre_nodes(n).unwrap() {
                assert!(legendre(n, x).0.abs() <= 1e-13, "n={n} x={x}");
            }
        }
    }

    #[test]
    fn table_node_sets() {
        let ns = NodeSet::fuse(2).unwrap();
        assert_eq!(ns.coords(), &[-1.0, 0.0, 1.0]);
        let ns = NodeSet::fuse(3).unwrap();
        let s = (1.0f64 / 3.0).sqrt();
        assert!(close(ns.coords()[1], -s, 1e-15) && close(ns.coords()[2], s, 1e-15));
        let ns = NodeSet::new(NodeKind::Uniform, 4).unwrap();
        assert_eq!(ns.coords(), &[-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(NodeSet::fuse(1).unwrap().coords(), &[-1.0, 1.0]);
        assert!(NodeSet::fuse(0).is_err());
    }

    #[test]
    fn lobatto_nodes_are_roots_of_derivative() {
        let ns = NodeSet::new(NodeKind::GaussLobatto, 4).unwrap();
        let s = (3.0f64 / 7.0).sqrt();
        assert!(close(ns.coords()[1], -s, 1e-15));
        assert_eq!(ns.coords()[2], 0.0);
        for p in 2..=20 {
            let ns = NodeSet::new(NodeKind::GaussLobatto, p).unwrap();
            for &x in &ns.coords()[1..p] {
                assert!(legendre(p, x).1.abs() < 1e-11);
            }
        }
    }

    #[test]
    fn diff_matrix_small_cases() {
        let d = lagrange_diff_matrix(&NodeSet::fuse(1).unwrap());
        assert_eq!(d, vec![vec![-0.5, 0.5], vec![-0.5, 0.5]]);
        let d = lagrange_diff_matrix(&NodeSet::fuse(2).unwrap());
        // derivatives of ξ(ξ-1)/2, 1-ξ², ξ(ξ+1)/2 at ξ = 0 and ξ = 1
        let mid = [-0.5, 0.0, 0.5];
        let last = [0.5, -2.0, 1.5];
        for j in 0..3 {
            assert!(close(d[1][j], mid[j], 1e-15));
            assert!(close(d[2][j], last[j], 1e-15));
        }
    }

    #[test]
    fn simpson_weights() {
        let w = interpolatory_weights(&NodeSet::fuse(2).unwrap());
        let expect = [1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0];
        for (a, b) in w.iter().zip(expect) {
            assert!(close(*a, b, 1e-15));
        }
    }

    #[test]
    fn p3_weights_against_brute_force() {
        let ns = NodeSet::fuse(3).unwrap();
        let w = interpolatory_weights(&ns);
        // composite Simpson on the product-form basis (exact for cubics up to round-off)
        let m = 2000;
        let xs = ns.coords();
        for (j, wj) in w.iter().enumerate() {
            let phi = |x: f64| {
                let mut v = 1.0;
                for (k, xk) in xs.iter().enumerate() {
                    if k != j {
                        v *= (x - xk) / (xs[j] - xk);
                    }
                }
                v
            };
            let h = 2.0 / m as f64;
            let mut s = phi(-1.0) + phi(1.0);
            for i in 1..m {
                let x = -1.0 + i as f64 * h;
                s += if i % 2 == 1 { 4.0 } else { 2.0 } * phi(x);
            }
            assert!(close(s * h / 3.0, *wj, 1e-12), "j={j}");
        }
        assert!(close(w.iter().sum::<f64>(), 2.0, 1e-14));
    }

    #[test]
    fn lagrange_evaluation() {
        let ns = NodeSet::fuse(3).unwrap();
        let c: Vec<f64> = ns.coords().iter().map(|x| x * x).collect();
        assert!(close(evaluate_lagrange(&ns, &c, 0.3), 0.09, 1e-14));
        assert_eq!(evaluate_lagrange(&ns, &c, ns.coords()[1]), c[1]);
        // Lagrange remainder bound e·|ω(0.5)|/7! at p = 6 is about 2e-6
        let ns = NodeSet::fuse(6).unwrap();
        let c: Vec<f64> = ns.coords().iter().map(|x| x.exp()).collect();
        let omega: f64 = ns.coords().iter().map(|x| (0.5 - x).abs()).product();
        let bound = std::f64::consts::E * omega / 5040.0;
        assert!(close(evaluate_lagrange(&ns, &c, 0.5), 0.5f64.exp(), bound));
        let ns = NodeSet::fuse(8).unwrap();
        let c: Vec<f64> = ns.coords().iter().map(|x| x.exp()).collect();
        assert!(close(evaluate_lagrange(&ns, &c, 0.5), 0.5f64.exp(), 1e-6));
    }

    #[test]
    fn interior_gauss_weights_p3() {
        let re = ReferenceElement::build(NodeKind::GaussLegendrePlusEndpoints, 3).unwrap();
        let w = re.interior_gauss_weights().unwrap();
        assert!(close(w[0], 1.0, 1e-14) && close(w[1], 1.0, 1e-14));
        let re1 = ReferenceElement::build(NodeKind::GaussLegendrePlusEndpoints, 1).unwrap();
        assert!(re1.interior_gauss_weights().is_err());
    }

    #[test]
    fn node_kind_parsing() {
        for k in NodeKind::ALL {
            assert_eq!(k.name().parse::<NodeKind>().unwrap(), k);
        }
        assert!("chebyshev".parse::<NodeKind>().is_err());
    }
}
