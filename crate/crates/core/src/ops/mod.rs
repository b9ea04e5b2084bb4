//! Global FUSE operators: upwinded first derivatives, split Laplacians,
//! nonlinear flux divergence and the 1D equivalence constructions.

mod dirichlet;
mod equivalence;
mod first1d;
mod flux;
mod space2d;

use std::fmt;
use std::sync::Arc;

use crate::Vec2;

pub use dirichlet::impose_dirichlet;
pub use equivalence::{
    nodal_weights, petrov_galerkin_operator_1d, petrov_galerkin_parts_1d,
    petrov_galerkin_parts_with_weights, sd_operator_1d,
};
pub use first1d::{assemble_first_derivative_1d, assemble_laplacian_1d, upwind_element_1d, ElementStencils1D};
pub use flux::{
    apply_flux_divergence_1d, apply_system_flux_divergence_1d, Characteristics, EulerFlux1D,
    FluxSystem, NumericalCharacteristics,
};
pub use space2d::{random_split_velocity, Space2D, UpwindSelection, DEFAULT_SPLIT_SEED};

/// Relative tolerance deciding whether a traced velocity is parallel to a face.
pub const TAU_ALIGN: f64 = 1e-10;

/// Upwinding velocity. 1D operators read the first component.
#[derive(Clone)]
pub enum VelocityField {
    Constant(Vec2),
    /// One vector per global dof.
    PerDof(Vec<Vec2>),
    /// Analytic field evaluated at the dof's physical coordinate.
    Function(Arc<dyn Fn(Vec2) -> Vec2 + Send + Sync>),
}

impl VelocityField {
    pub fn constant_1d(a: f64) -> Self {
        VelocityField::Constant([a, 0.0])
    }

    pub fn function(f: impl Fn(Vec2) -> Vec2 + Send + Sync + 'static) -> Self {
        VelocityField::Function(Arc::new(f))
    }

    pub fn at(&self, dof: usize, x: Vec2) -> Vec2 {
        match self {
            VelocityField::Constant(a) => *a,
            VelocityField::PerDof(v) => v[dof],
            VelocityField::Function(f) => f(x),
        }
    }

    pub fn negated(&self) -> Self {
        match self {
            VelocityField::Constant(a) => VelocityField::Constant([-a[0], -a[1]]),
            VelocityField::PerDof(v) => {
                VelocityField::PerDof(v.iter().map(|a| [-a[0], -a[1]]).collect())
            }
            VelocityField::Function(f) => {
                let f = Arc::clone(f);
                VelocityField::function(move |x| {
                    let a = f(x);
                    [-a[0], -a[1]]
                })
            }
        }
    }
}

impl fmt::Debug for VelocityField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VelocityField::Constant(a) => write!(f, "Constant({a:?})"),
            VelocityField::PerDof(v) => write!(f, "PerDof({} values)", v.len()),
            VelocityField::Function(_) => write!(f, "Function(..)"),
        }
    }
}
