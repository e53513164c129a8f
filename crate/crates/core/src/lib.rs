//! Mesh-side building blocks for learned seam placement: indexed triangle
//! meshes and their I/O, dual-graph features, per-shell parameterization,
//! distortion-weighted Steiner refinement of seams and seam skeletonization.

pub mod dual;
pub mod error;
pub mod geom;
pub mod graph;
pub mod linalg;
pub mod mesh;
pub mod shapes;
pub mod skeleton;
pub mod steiner;
pub mod unwrap;

pub use error::{Error, Result};
pub use mesh::{Mesh, SeamLabels, ShellPartition};
