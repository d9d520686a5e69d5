//! Sphere-valued magnetization fields on the unit sphere: discretization on
//! geodesic meshes, the anisotropic energy, topological charge and angular
//! momentum functionals, Landau-Lifshitz dynamics and energy minimization
//! under an angular-momentum constraint.

pub mod dynamics;
pub mod error;
pub mod field;
pub mod functionals;
pub mod geometry;
pub mod io;
pub mod minimizer;
pub mod oracle;
pub mod verify;
pub mod vec3;

pub use error::{Error, Result};
pub use field::Field;
pub use geometry::TriMesh;
pub use vec3::{Rotation, Vec3};
