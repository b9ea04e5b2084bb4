use std::collections::BTreeMap;

use crate::error::{FuseError, Result};
use crate::sparse::CsrMatrix;

/// Replaces each listed row by the identity row and sets the matching rhs
/// entry. A dof listed twice must carry the same value.
pub fn impose_dirichlet(
    op: &CsrMatrix,
    rhs: &[f64],
    boundary_dofs: &[usize],
    values: &[f64],
) -> Result<(CsrMatrix, Vec<f64>)> {
    if boundary_dofs.len() != values.len() {
        return Err(FuseError::InvalidArgument(format!(
            "{} boundary dofs but {} values",
            boundary_dofs.len(),
            values.len()
        )));
    }
    if rhs.len() != op.n_rows() {
        return Err(FuseError::InvalidArgument("rhs length does not match the operator".into()));
    }
    let mut fixed: BTreeMap<usize, f64> = BTreeMap::new();
    for (&g, &v) in boundary_dofs.iter().zip(values) {
        if g >= op.n_rows() {
            return Err(FuseError::InvalidArgument(format!("boundary dof {g} out of range")));
        }
        if let Some(&old) = fixed.get(&g) {
            if old != v {
                return Err(FuseError::InvalidArgument(format!(
                    "dof {g} given conflicting boundary values {old} and {v}"
                )));
            }
        }
        fixed.insert(g, v);
    }
    let rows: Vec<usize> = fixed.keys().copied().collect();
    let mut b = rhs.to_vec();
    for (&g, &v) in &fixed {
        b[g] = v;
    }
    Ok((op.with_identity_rows(&rows), b))
}
