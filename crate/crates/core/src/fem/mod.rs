//! Lagrange finite elements on periodic triangulations: quadrature, shape
//! functions, degree-of-freedom maps, sparse matrices, fields and norms.

pub mod dofmap;
pub mod element;
pub mod field;
pub mod locate;
pub mod norms;
pub mod quadrature;
pub mod sparse;

pub use dofmap::DofMap;
pub use element::TriGeom;
pub use field::{Gauge, MixedField, ScalarField};
pub use locate::Locator;
pub use sparse::{CscMatrix, Factorization, PatternBuilder};
