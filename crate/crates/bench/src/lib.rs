//! Shared fixtures for the solver benchmarks.

use std::sync::Arc;

use curvslip_core::geometry::{build_cell_mesh, InclusionSpec, PeriodicMesh};
use curvslip_core::CurveSpec;

pub fn inclusion() -> InclusionSpec {
    InclusionSpec::centered_circle(0.25)
}

pub fn curve() -> CurveSpec {
    CurveSpec::sine(1.0, 0.1)
}

pub fn cell_mesh(h: f64) -> Arc<PeriodicMesh> {
    Arc::new(build_cell_mesh(&inclusion(), h).expect("cell mesh"))
}
