//! Periodic cell problems with frozen metric and the permeability matrix.
//!
//! For direction `j` the cell problem is the transformed Stokes system on
//! the fluid part `Y*` of the unit cell with body force `e_j`, no-slip on
//! the inclusion and periodicity in both directions. The permeability is
//! `A_{ji} = ∫_{Y*} w^j_i`.

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{norms, Gauge, MixedField};
use crate::geometry::{build_cell_mesh, BoundaryTag, InclusionSpec, PeriodicMesh};
use crate::stokes::{forms, Forcing, Metric, StokesSetup, StokesSystem};
use crate::transform::CurveSpec;

/// Relative asymmetry of `A` tolerated before a sample is rejected.
pub const SYMMETRY_TOLERANCE: f64 = 1e-8;

/// Permeability at one abscissa together with the two cell solutions.
#[derive(Clone, Debug)]
pub struct PermeabilitySample {
    pub x1: f64,
    pub gprime: f64,
    /// `a[j][i] = ∫ w^j_i`.
    pub a: [[f64; 2]; 2],
    pub eig_lo: f64,
    pub eig_hi: f64,
    /// `w¹, w²`, shared between samples with the same slope.
    pub w_fields: Arc<[MixedField; 2]>,
}

impl PermeabilitySample {
    /// Frobenius norm of `A`.
    pub fn norm(&self) -> f64 {
        frobenius(&self.a)
    }

    /// `|A₁₂ − A₂₁| / ‖A‖`.
    pub fn asymmetry(&self) -> f64 {
        let n = self.norm();
        if n == 0.0 {
            0.0
        } else {
            (self.a[0][1] - self.a[1][0]).abs() / n
        }
    }

    /// `a(w^j, w^j)` for both directions, the energy side of `A_jj`.
    pub fn energies(&self) -> [f64; 2] {
        let metric = Metric::Frozen(self.gprime);
        let w = &*self.w_fields;
        let mesh = &w[0].mesh;
        [
            forms::bilinear_a(mesh, &metric, &w[0].velocity, &w[0].velocity),
            forms::bilinear_a(mesh, &metric, &w[1].velocity, &w[1].velocity),
        ]
    }
}

fn frobenius(a: &[[f64; 2]; 2]) -> f64 {
    a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

/// Eigenvalues (ascending) of the symmetric part of a 2×2 matrix.
pub fn symmetric_eigenvalues(a: &[[f64; 2]; 2]) -> (f64, f64) {
    let off = 0.5 * (a[0][1] + a[1][0]);
    let mean = 0.5 * (a[0][0] + a[1][1]);
    let half = 0.5 * (a[0][0] - a[1][1]);
    let r = half.hypot(off);
    (mean - r, mean + r)
}

/// Both cell problems for one slope on a given cell mesh, sharing one
/// factorization.
pub fn solve_cell_pair(mesh: Arc<PeriodicMesh>, gprime: f64) -> Result<[MixedField; 2]> {
    let setup = StokesSetup {
        dirichlet: vec![BoundaryTag::Pore],
        gauge: Gauge::ZeroMean,
    };
    let system = StokesSystem::assemble(mesh, Metric::Frozen(gprime), setup)?;
    let e1 = |_: [f64; 2]| [1.0, 0.0];
    let e2 = |_: [f64; 2]| [0.0, 1.0];
    let w1 = system.solve(&Forcing {
        body: Some(&e1),
        ..Forcing::default()
    })?;
    let w2 = system.solve(&Forcing {
        body: Some(&e2),
        ..Forcing::default()
    })?;
    Ok([w1, w2])
}

/// The cell solution `(w^j, π^j)` for direction `j ∈ {1, 2}` with the
/// metric frozen at `F(x₁)`.
pub fn solve_cell(
    spec: &CurveSpec,
    x1: f64,
    j: usize,
    inclusion: &InclusionSpec,
    h: f64,
) -> Result<MixedField> {
    if !(j == 1 || j == 2) {
        return Err(Error::Config(format!("cell direction must be 1 or 2, got {j}")));
    }
    let mesh = Arc::new(build_cell_mesh(inclusion, h)?);
    let setup = StokesSetup {
        dirichlet: vec![BoundaryTag::Pore],
        gauge: Gauge::ZeroMean,
    };
    let system = StokesSystem::assemble(mesh, Metric::Frozen(spec.gprime(x1)), setup)?;
    let force = move |_: [f64; 2]| if j == 1 { [1.0, 0.0] } else { [0.0, 1.0] };
    system.solve(&Forcing {
        body: Some(&force),
        ..Forcing::default()
    })
}

/// `A_{ji} = ∫ w^j_i` from the two cell solutions.
pub fn permeability_matrix(w: &[MixedField; 2]) -> [[f64; 2]; 2] {
    [norms::velocity_integral(&w[0]), norms::velocity_integral(&w[1])]
}

/// Key identifying slopes that give the same frozen problem.
pub(crate) fn slope_key(gp: f64) -> i64 {
    (gp * 1e12).round() as i64
}

/// Uniform abscissae `k L / n`, `k = 0..n`.
pub fn uniform_grid(period: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| period * k as f64 / n as f64).collect()
}

/// Permeability samples on an abscissa grid. Cell problems are solved once
/// per distinct slope, concurrently.
pub fn permeability(
    spec: &CurveSpec,
    x1_grid: &[f64],
    inclusion: &InclusionSpec,
    h: f64,
) -> Result<Vec<PermeabilitySample>> {
    let mesh = Arc::new(build_cell_mesh(inclusion, h)?);
    permeability_on(spec, x1_grid, mesh)
}

/// [`permeability`] on a prebuilt cell mesh.
pub fn permeability_on(
    spec: &CurveSpec,
    x1_grid: &[f64],
    mesh: Arc<PeriodicMesh>,
) -> Result<Vec<PermeabilitySample>> {
    if x1_grid.is_empty() {
        return Err(Error::Config("permeability needs at least one abscissa".into()));
    }
    let mut slopes: Vec<(i64, f64)> = Vec::new();
    for &x in x1_grid {
        let gp = spec.gprime(x);
        let key = slope_key(gp);
        if !slopes.iter().any(|(k, _)| *k == key) {
            slopes.push((key, gp));
        }
    }
    let solved: Vec<(i64, Arc<[MixedField; 2]>)> = slopes
        .par_iter()
        .map(|&(key, gp)| Ok((key, Arc::new(solve_cell_pair(mesh.clone(), gp)?))))
        .collect::<Result<_>>()?;
    let cache: HashMap<i64, Arc<[MixedField; 2]>> = solved.into_iter().collect();
    let mut out = Vec::with_capacity(x1_grid.len());
    for &x in x1_grid {
        let gp = spec.gprime(x);
        let w = cache[&slope_key(gp)].clone();
        let a = permeability_matrix(&w);
        let (eig_lo, eig_hi) = symmetric_eigenvalues(&a);
        let sample = PermeabilitySample {
            x1: x,
            gprime: gp,
            a,
            eig_lo,
            eig_hi,
            w_fields: w,
        };
        check_spd(&sample)?;
        out.push(sample);
    }
    Ok(out)
}

/// Rejects samples whose permeability is not symmetric positive definite
/// to tolerance.
pub fn check_spd(s: &PermeabilitySample) -> Result<()> {
    if s.asymmetry() > SYMMETRY_TOLERANCE {
        return Err(Error::NumericalQuality(format!(
            "permeability at x1 = {} is not symmetric (relative asymmetry {:.3e}); refine the cell mesh",
            s.x1,
            s.asymmetry()
        )));
    }
    if !(s.eig_lo > 0.0) {
        return Err(Error::NumericalQuality(format!(
            "permeability at x1 = {} is not positive definite (eigenvalues {:.3e}, {:.3e}); refine the cell mesh",
            s.x1, s.eig_lo, s.eig_hi
        )));
    }
    Ok(())
}
