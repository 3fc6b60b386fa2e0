//! Finite-element workbench for Stokes flow over a curved, periodic porous
//! bed: transformed Stokes solves, cell and boundary-layer problems, the
//! effective Stokes–Darcy model with slip, and direct validation against
//! microscale simulations.

pub mod boundary_layer;
pub mod cell;
pub mod dns;
pub mod effective;
pub mod error;
pub mod fem;
pub mod fit;
pub mod force;
pub mod geometry;
pub mod interp;
pub mod jet;
pub mod stokes;
pub mod transform;
pub mod workbench;

pub use error::{Error, Result};
pub use transform::{jacobian, map_point, transform_vectors, unmap_point, CurveSpec, JacobianSample};
