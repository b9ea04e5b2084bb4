//! Spectral difference and nodally integrated Petrov-Galerkin constructions
//! in 1D, assembled independently of the FUSE stencils so the operators can be
//! compared entrywise.

use super::first1d::{upwind_element_1d, ElementStencils1D};
use super::VelocityField;
use crate::error::{FuseError, Result};
use crate::mesh::Mesh1D;
use crate::refelem::{diff_matrix_from_points, lagrange_basis, NodeSet, ReferenceElement};
use crate::sparse::CsrMatrix;

/// Spectral difference operator for `a = 1` on `n` periodic elements of
/// width `h`. Flux points are the degree-`p` Gauss-Legendre-plus-endpoints
/// nodes, solution points are the flux points without the leftmost one, and
/// element interfaces take the upwind numerical flux. Solution point `i` of
/// element `k` is identified with global dof `(k·p + i) mod (n·p)`.
pub fn sd_operator_1d(p: usize, n: usize, h: f64) -> Result<CsrMatrix> {
    if p < 1 || n < 1 || !(h > 0.0) {
        return Err(FuseError::InvalidArgument(format!("invalid SD setup p={p}, n={n}, h={h}")));
    }
    let a = 1.0;
    let flux_pts = NodeSet::fuse(p)?.coords().to_vec();
    let sol_pts = &flux_pts[1..];
    // extrapolation of the degree p-1 solution polynomial to every flux point
    let ext: Vec<Vec<f64>> = flux_pts.iter().map(|&f| lagrange_basis(sol_pts, f).0).collect();
    let d: Vec<Vec<f64>> = diff_matrix_from_points(&flux_pts)
        .into_iter()
        .map(|r| r.into_iter().map(|v| v * 2.0 / h).collect())
        .collect();
    let n_dofs = n * p;
    let sol_dof = |k: usize, m: usize| (k * p + m + 1) % n_dofs;
    let upwind = |left: f64, right: f64| if a > 0.0 { a * left } else { a * right };

    let mut rows = vec![Vec::new(); n_dofs];
    for k in 0..n {
        let km1 = (k + n - 1) % n;
        let kp1 = (k + 1) % n;
        // flux value at each flux point as (global dof, coefficient) combinations
        let mut flux: Vec<Vec<(usize, f64)>> = Vec::with_capacity(p + 1);
        for q in 0..=p {
            let mut f = Vec::new();
            if q == 0 {
                for m in 0..p {
                    f.push((sol_dof(km1, m), upwind(ext[p][m], 0.0)));
                    f.push((sol_dof(k, m), upwind(0.0, ext[0][m])));
                }
            } else if q == p {
                for m in 0..p {
                    f.push((sol_dof(k, m), upwind(ext[p][m], 0.0)));
                    f.push((sol_dof(kp1, m), upwind(0.0, ext[0][m])));
                }
            } else {
                for m in 0..p {
                    f.push((sol_dof(k, m), a * ext[q][m]));
                }
            }
            flux.push(f);
        }
        for i in 1..=p {
            let g = sol_dof(k, i - 1);
            for (q, f) in flux.iter().enumerate() {
                rows[g].extend(f.iter().map(|&(c, v)| (c, d[i][q] * v)));
            }
        }
    }
    Ok(CsrMatrix::from_rows(n_dofs, rows))
}

/// Positive nodal integration weights on `[-1, 1]`.
///
/// The interpolatory weights are used when they are all positive. For the
/// Gauss-Legendre-plus-endpoints nodes with `p ≥ 3` the endpoint weights vanish
/// (the interior Gauss points alone are exact to degree `2p − 3 ≥ p`), so the
/// dual-cell widths `(x_{i+1} − x_{i−1}) / 2` are used instead. The weights
/// cancel in `M⁻¹ S`, so any positive choice gives the same operator.
pub fn nodal_weights(re: &ReferenceElement) -> Vec<f64> {
    if re.weights.iter().all(|w| *w > 1e-12) {
        return re.weights.clone();
    }
    let x = re.nodes.coords();
    let p = x.len() - 1;
    (0..=p)
        .map(|i| 0.5 * (x[(i + 1).min(p)] - x[i.saturating_sub(1)]))
        .collect()
}

/// Nodally integrated mass and stiffness matrices with upwind-restricted
/// test functions, using [`nodal_weights`].
pub fn petrov_galerkin_parts_1d(
    mesh: &Mesh1D,
    re: &ReferenceElement,
    vel: &VelocityField,
) -> Result<(CsrMatrix, CsrMatrix)> {
    petrov_galerkin_parts_with_weights(mesh, re, vel, &nodal_weights(re))
}

/// As [`petrov_galerkin_parts_1d`] with explicit reference weights.
pub fn petrov_galerkin_parts_with_weights(
    mesh: &Mesh1D,
    re: &ReferenceElement,
    vel: &VelocityField,
    weights: &[f64],
) -> Result<(CsrMatrix, CsrMatrix)> {
    if weights.len() != re.nodes.len() {
        return Err(FuseError::InvalidArgument("one weight per node required".into()));
    }
    if let Some(w) = weights.iter().find(|w| !(**w > 1e-12)) {
        return Err(FuseError::Config(format!(
            "nodal integration weights must be positive, found {w}"
        )));
    }
    let st = ElementStencils1D::new(mesh, re);
    let p = re.degree();
    let xs = re.nodes.coords();
    // phi[l][i] = φ_i(s_l)
    let phi: Vec<Vec<f64>> = xs.iter().map(|&x| lagrange_basis(xs, x).0).collect();
    let n = st.dofs.n_dofs();
    let mut mass = vec![Vec::new(); n];
    let mut stiff = vec![Vec::new(); n];
    for g in 0..n {
        let x = st.dofs.coords()[g];
        let a = vel.at(g, [x, 0.0])[0];
        let (k, li) = upwind_element_1d(&st, g, a);
        let jac = 0.5 * mesh.width(k);
        for l in 0..=p {
            let wt = weights[l] * jac * phi[l][li];
            if wt == 0.0 {
                continue;
            }
            for j in 0..=p {
                let c = st.dofs.global(k, j);
                mass[g].push((c, wt * phi[l][j]));
                stiff[g].push((c, wt * st.diff[k][l][j]));
            }
        }
    }
    Ok((CsrMatrix::from_rows(n, mass), CsrMatrix::from_rows(n, stiff)))
}

/// `M⁻¹ S` of the nodally integrated Petrov-Galerkin method.
pub fn petrov_galerkin_operator_1d(
    mesh: &Mesh1D,
    re: &ReferenceElement,
    vel: &VelocityField,
) -> Result<CsrMatrix> {
    let (mass, stiff) = petrov_galerkin_parts_1d(mesh, re, vel)?;
    let mut inv = vec![0.0; mass.n_rows()];
    for (r, d) in inv.iter_mut().enumerate() {
        let mut diag = 0.0;
        for (c, v) in mass.row(r) {
            if c == r {
                diag = v;
            } else if v.abs() > 1e-13 * mass.row_abs_max(r) {
                return Err(FuseError::Numerical(format!("nodal mass matrix not diagonal in row {r}")));
            }
        }
        if diag == 0.0 {
            return Err(FuseError::Config(format!("zero nodal mass at dof {r}")));
        }
        *d = 1.0 / diag;
    }
    Ok(stiff.scale_rows(&inv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ops::assemble_first_derivative_1d;
    use crate::refelem::NodeKind;

    #[test]
    fn sd_matches_fuse() {
        for (p, n) in [(2, 4), (3, 3), (5, 2)] {
            let h = 0.3;
            let mesh = Mesh1D::uniform(n, (0.0, n as f64 * h), true).unwrap();
            let re = ReferenceElement::build(NodeKind::GaussLegendrePlusEndpoints, p).unwrap();
            let fuse = assemble_first_derivative_1d(&mesh, &re, &VelocityField::constant_1d(1.0)).unwrap();
            let sd = sd_operator_1d(p, n, h).unwrap();
            assert!(sd.max_abs_diff(&fuse) <= 1e-12, "p={p} n={n}");
            assert!(sd.row_sums().iter().all(|s| s.abs() < 1e-11));
        }
    }

    #[test]
    fn petrov_matches_fuse() {
        for (p, n, a) in [(2, 4, 1.0), (3, 5, -1.0)] {
            let mesh = Mesh1D::uniform(n, (0.0, 1.0), true).unwrap();
            let re = ReferenceElement::build(NodeKind::GaussLegendrePlusEndpoints, p).unwrap();
            let vel = VelocityField::constant_1d(a);
            let fuse = assemble_first_derivative_1d(&mesh, &re, &vel).unwrap();
            let pg = petrov_galerkin_operator_1d(&mesh, &re, &vel).unwrap();
            assert!(pg.max_abs_diff(&fuse) <= 1e-12);
        }
    }

    #[test]
    fn nodal_mass_is_diagonal() {
        let mesh = Mesh1D::uniform(4, (0.0, 2.0), true).unwrap();
        let re = ReferenceElement::build(NodeKind::GaussLegendrePlusEndpoints, 3).unwrap();
        let (m, _) = petrov_galerkin_parts_1d(&mesh, &re, &VelocityField::constant_1d(1.0)).unwrap();
        let w = nodal_weights(&re);
        for g in 0..m.n_rows() {
            assert_eq!(m.row_len(g), 1);
            assert!((m.get(g, g) - w[g % 3] * 0.25).abs() < 1e-15);
        }
        let vel = VelocityField::constant_1d(1.0);
        let zero_end = petrov_galerkin_parts_with_weights(&mesh, &re, &vel, &re.weights);
        assert!(matches!(zero_end, Err(FuseError::Config(_))));
    }
}
