//! 1D meshes, curvilinear quadrilateral meshes, generators and the shared-node dof map.

mod dofmap;
mod generators;
mod io;
mod mesh1d;
mod quad;

pub use dofmap::{DofClass, DofMap};
pub use generators::{circle_mesh, perturbed_mesh, structured_mesh, Rect};
pub use io::{load_mesh, parse_mesh, save_mesh, write_mesh};
pub use mesh1d::{DofMap1D, Mesh1D};
pub use quad::{
    BoundaryCurve, Face, MappingEval, QuadMesh, LOCAL_FACE_VERTICES, LOCAL_VERTEX_REF,
};
