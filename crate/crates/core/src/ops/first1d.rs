use super::VelocityField;
use crate::error::{FuseError, Result};
use crate::mesh::{DofMap1D, Mesh1D};
use crate::refelem::ReferenceElement;
use crate::sparse::CsrMatrix;

/// Per-element physical differentiation matrices `D · 2/h_K` together with the
/// dof numbering, used both for assembly and matrix-free flux evaluation.
#[derive(Debug, Clone)]
pub struct ElementStencils1D {
    pub dofs: DofMap1D,
    pub diff: Vec<Vec<Vec<f64>>>,
}

impl ElementStencils1D {
    pub fn new(mesh: &Mesh1D, re: &ReferenceElement) -> Self {
        let dofs = mesh.dofs(&re.nodes);
        let diff = (0..mesh.n_elements())
            .map(|k| {
                let s = 2.0 / mesh.width(k);
                re.diff_matrix
                    .iter()
                    .map(|row| row.iter().map(|d| d * s).collect())
                    .collect()
            })
            .collect();
        ElementStencils1D { dofs, diff }
    }

    pub fn degree(&self) -> usize {
        self.dofs.degree()
    }

    /// Derivative at every local node of element `k` of the nodal field `f`
    /// (indexed by global dof).
    pub fn element_derivative(&self, k: usize, f: &[f64]) -> Vec<f64> {
        let p = self.degree();
        let vals: Vec<f64> = (0..=p).map(|j| f[self.dofs.global(k, j)]).collect();
        self.diff[k]
            .iter()
            .map(|row| row.iter().zip(&vals).map(|(d, v)| d * v).sum())
            .collect()
    }

    /// The (element, local node) pairs that contain global dof `g`, left first.
    pub fn owners(&self, g: usize) -> Vec<(usize, usize)> {
        let p = self.degree();
        let n = self.dofs.n_elements();
        if !g.is_multiple_of(p) {
            return vec![(g / p, g % p)];
        }
        let k = g / p;
        let mut out = Vec::with_capacity(2);
        if k >= 1 {
            out.push((k - 1, p));
        } else if self.dofs.is_periodic() {
            out.push((n - 1, p));
        }
        if k < n {
            out.push((k, 0));
        }
        out
    }
}

/// Element whose stencil is used at dof `g` for velocity `a`: the left
/// neighbour when `a > 0`, the right one when `a ≤ 0`. At a non-periodic
/// domain end the only owner is used.
pub fn upwind_element_1d(st: &ElementStencils1D, g: usize, a: f64) -> (usize, usize) {
    let own = st.owners(g);
    match own.as_slice() {
        [only] => *only,
        [left, right] => {
            if a > 0.0 {
                *left
            } else {
                *right
            }
        }
        _ => unreachable!("a 1D dof has one or two owners"),
    }
}

/// Upwinded global first-derivative operator on a 1D mesh.
pub fn assemble_first_derivative_1d(
    mesh: &Mesh1D,
    re: &ReferenceElement,
    vel: &VelocityField,
) -> Result<CsrMatrix> {
    let st = ElementStencils1D::new(mesh, re);
    assemble_from_stencils(&st, vel)
}

pub(crate) fn assemble_from_stencils(st: &ElementStencils1D, vel: &VelocityField) -> Result<CsrMatrix> {
    let n = st.dofs.n_dofs();
    let p = st.degree();
    let mut rows = Vec::with_capacity(n);
    for g in 0..n {
        let x = st.dofs.coords()[g];
        let a = vel.at(g, [x, 0.0])[0];
        if !a.is_finite() {
            return Err(FuseError::InvalidArgument(format!("non-finite velocity at dof {g}")));
        }
        let (k, i) = upwind_element_1d(st, g, a);
        rows.push(
            (0..=p)
                .map(|j| (st.dofs.global(k, j), st.diff[k][i][j]))
                .collect(),
        );
    }
    Ok(CsrMatrix::from_rows(n, rows))
}

/// Split Laplacian `L = A⁻ A⁺` (approximates `+d²/dx²`); `A⁺` is upwinded by
/// `split` and `A⁻` by `−split`.
pub fn assemble_laplacian_1d(mesh: &Mesh1D, re: &ReferenceElement, split: f64) -> Result<CsrMatrix> {
    let st = ElementStencils1D::new(mesh, re);
    let plus = assemble_from_stencils(&st, &VelocityField::constant_1d(split))?;
    let minus = assemble_from_stencils(&st, &VelocityField::constant_1d(-split))?;
    Ok(minus.matmul(&plus))
}
