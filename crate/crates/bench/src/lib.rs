//! Fixtures shared by the criterion benches.

use fuse_core::bench::{advection_1d_operator, advection_2d_mesh, advection_2d_operator, MeshKind};
use fuse_core::ops::Space2D;
use fuse_core::{CsrMatrix, NodeKind, ReferenceElement, Result};

/// Periodic 1D advection operator and a smooth state.
pub fn advection_1d(p: usize, n: usize) -> Result<(CsrMatrix, Vec<f64>)> {
    let (_, _, op) = advection_1d_operator(p, n)?;
    let u = (0..op.n_rows()).map(|i| (i as f64 * 0.1).sin()).collect();
    Ok((op, u))
}

/// Degree-`p` space on the structured 2D advection mesh at `level`.
pub fn space_2d(p: usize, level: usize) -> Result<Space2D> {
    let mesh = advection_2d_mesh(MeshKind::Structured, level, 0)?;
    Space2D::new(mesh, ReferenceElement::build(NodeKind::GaussLegendrePlusEndpoints, p)?)
}

/// Inflow-constrained 2D advection operator on [`space_2d`].
pub fn advection_2d(p: usize, level: usize) -> Result<CsrMatrix> {
    Ok(advection_2d_operator(&space_2d(p, level)?)?.0)
}

/// Diagonally shifted operator, nonsingular for the LU benches.
pub fn shifted(op: &CsrMatrix, shift: f64) -> CsrMatrix {
    op.add_scaled(1.0, &CsrMatrix::identity(op.n_rows()), shift)
}
