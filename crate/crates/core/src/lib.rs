//! Face-upwinded spectral element (FUSE) discretisations.
//!
//! The crate is organised bottom-up:
//!
//! * [`refelem`]: 1D node sets, Lagrange machinery and quadrature on `[-1, 1]`.
//! * [`mesh`]: 1D meshes, curvilinear quadrilateral meshes and the shared-node dof map.
//! * [`sparse`]: compressed sparse row operators and the direct sparse solver.
//! * [`ops`]: upwinded first-derivative operators, split Laplacians, nonlinear flux
//!   divergence and the spectral-difference / Petrov-Galerkin equivalence constructions.
//! * [`vnstab`]: von Neumann symbols, the dense eigensolver and stability scans.
//! * [`timeloop`]: RK4, Crank-Nicolson and Newton.
//! * [`bench`]: benchmark problems, error norms and convergence reports.

pub mod bench;
pub mod error;
pub mod mesh;
pub mod ops;
pub mod refelem;
pub mod sparse;
pub mod timeloop;
pub mod vnstab;

pub use error::{FuseError, Result};
pub use mesh::{DofMap, Mesh1D, QuadMesh};
pub use refelem::{NodeKind, NodeSet, ReferenceElement};
pub use sparse::{CsrMatrix, SparseLu};

/// Two-component vector used for coordinates and velocities.
pub type Vec2 = [f64; 2];
