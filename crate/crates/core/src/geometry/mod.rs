//! Periodic triangulations of the unit cell, the boundary-layer strip and
//! the composite ε-periodic domain, plus a plain-text export.

mod builders;
mod export;
mod inclusion;
mod mesh;
mod templates;

pub use builders::{
    build_box_mesh, build_cell_mesh, build_eps_mesh, build_strip_mesh, cells_per,
    template_divisions, EpsMeshParams, DEFAULT_PORE_LAYERS, DEFAULT_TOP_HEIGHT,
};
pub use export::{read_mesh, write_mesh};
pub use inclusion::{InclusionKind, InclusionSpec, MARGIN};
pub use mesh::{
    BoundaryEdge, BoundaryTag, EdgeLookup, MeshQuality, PeriodicMesh, PeriodicPair, Region,
};
