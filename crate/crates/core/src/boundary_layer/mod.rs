//! Boundary-layer problems on the truncated strip and their decay constants.
//!
//! For a frozen slope `g′` the layer `(β, ω)` solves the homogeneous
//! transformed Stokes system on the strip `Z = (0,1) × (−n, top)` minus the
//! inclusions below `S = {y₂ = 0}`, with the normal stress jump
//! `[(M∇β − F⁻¹ω)e₂]_S = K` across `S`. Weakly the jump is the interface
//! source `σ = −K`. The strip is cut with no-slip at the bottom and a
//! traction-free top; the pressure is shifted so that its mean in the
//! deepest layer (the stabilization constant `κ_∞`) is zero.

pub mod measure;

use std::collections::HashMap;
use std::sync::Arc;

use rayon::prelude::*;

use crate::cell::slope_key;
use crate::error::{Error, Result};
use crate::fem::{Gauge, MixedField};
use crate::fit::linear_fit;
use crate::geometry::{build_strip_mesh, BoundaryTag, InclusionSpec, PeriodicMesh};
use crate::stokes::{forms, Forcing, Metric, StokesSetup, StokesSystem};
use crate::transform::CurveSpec;

use measure::{
    layer_gradient_norms, layer_pressure_mean, pressure_line_average, traction_pressure_average,
    variational_flux, velocity_line_average,
};

/// Layer norms below this fraction of the largest one are at roundoff
/// level and left out of the decay fit.
pub const DECAY_FLOOR: f64 = 1e-11;

/// Number of depths `z = 0, −1, …` at which fluxes are reported.
pub const FLUX_DEPTHS: usize = 5;

/// Truncation and resolution of the strip.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StripSpec {
    pub n_pore_layers: usize,
    pub top_height: usize,
    pub h: f64,
}

impl StripSpec {
    pub fn build(&self, inclusion: &InclusionSpec) -> Result<PeriodicMesh> {
        build_strip_mesh(inclusion, self.n_pore_layers, self.top_height, self.h)
    }

    /// The same strip with twice as many pore layers.
    pub fn deepened(&self) -> Self {
        StripSpec {
            n_pore_layers: 2 * self.n_pore_layers,
            ..*self
        }
    }
}

/// Flux `∫₀¹ β·F⁻ᵀe₂ dy₁` near one depth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluxSample {
    pub depth: f64,
    /// Row average tested by the discrete mass equation.
    pub variational: f64,
    /// Pointwise line integral on `y₂ = depth`.
    pub line: f64,
}

/// Plane averages high in the free layer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FarField {
    pub heights: [f64; 2],
    /// `∫₀¹ ω(y₁, a) dy₁` at both heights.
    pub omega: [f64; 2],
    /// `∫₀¹ β(y₁, a) dy₁` at the lower height.
    pub beta: [f64; 2],
}

/// Exponential fit of layer norms.
#[derive(Clone, Debug, PartialEq)]
pub struct DecayFit {
    /// `−slope` of `log ‖∇β‖_{L²(Z_k)}` per unit depth; `+∞` for a zero
    /// field.
    pub rate: f64,
    pub r2: f64,
    /// Indices (into the layer list) entering the fit.
    pub used: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct BoundaryLayerSolution {
    pub x1: f64,
    pub gprime: f64,
    pub kbl: [f64; 2],
    /// Velocity and normalized pressure on the strip.
    pub field: MixedField,
    pub cbl: [f64; 2],
    pub cbl_omega: f64,
    /// Deepest-layer pressure mean before normalization.
    pub kappa_inf: f64,
    /// `∫₀¹ β(y₁, 0) dy₁`.
    pub interface_average: [f64; 2],
    /// `|C^bl·F⁻ᵀe₂| / |C^bl|` (absolute when `|C^bl| < 1e-12`).
    pub normal_residual: f64,
    pub fluxes: Vec<FluxSample>,
    /// `‖∇β‖` over pore layers `Z_k = (0,1)×(−k, −k+1)`, `k = 1..n`.
    pub pore_layer_norms: Vec<f64>,
    /// `‖∇β‖` over free layers `(j, j+1)`, `j = 0..top`.
    pub free_layer_norms: Vec<f64>,
    pub decay: DecayFit,
    pub far_field: FarField,
    /// Relative change of `C^bl` when the pore depth is doubled.
    pub truncation_delta: Option<f64>,
}

impl BoundaryLayerSolution {
    pub fn decay_rate(&self) -> f64 {
        self.decay.rate
    }
}

fn strip_setup() -> StokesSetup {
    StokesSetup {
        dirichlet: vec![BoundaryTag::Pore, BoundaryTag::Bottom],
        gauge: Gauge::None,
    }
}

fn strip_extent(mesh: &PeriodicMesh) -> (i32, i32) {
    let (lo, hi) = mesh
        .nodes
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p[1]), b.max(p[1])));
    (lo.round() as i32, hi.round() as i32)
}

/// Least-squares decay rate of the interior pore layers (first and last
/// excluded, as are layers at roundoff level).
pub fn decay_rate_fit(pore_layer_norms: &[f64]) -> DecayFit {
    let n = pore_layer_norms.len();
    let peak = pore_layer_norms.iter().cloned().fold(0.0, f64::max);
    if peak == 0.0 {
        return DecayFit {
            rate: f64::INFINITY,
            r2: 1.0,
            used: Vec::new(),
        };
    }
    let used: Vec<usize> = (1..n.saturating_sub(1))
        .filter(|&k| pore_layer_norms[k] > DECAY_FLOOR * peak)
        .collect();
    if pore_layer_norms.windows(2).any(|w| w[1] > w[0]) {
        log::warn!("boundary-layer norms are not monotone in depth: {pore_layer_norms:?}");
    }
    let x: Vec<f64> = used.iter().map(|&k| (k + 1) as f64).collect();
    let y: Vec<f64> = used.iter().map(|&k| pore_layer_norms[k].ln()).collect();
    match linear_fit(&x, &y) {
        Some(f) => DecayFit {
            rate: -f.slope,
            r2: f.r2,
            used,
        },
        None => DecayFit {
            rate: f64::NAN,
            r2: f64::NAN,
            used,
        },
    }
}

/// `C^bl` and the raw interface average `∫₀¹ β(y₁, 0) dy₁`. The
/// tangential part of `C^bl` comes from the trace, the normal part from the
/// discrete mass balance: `[[1, g′], [−g′, 1]] C = (∫β·Fe₁, ∫β·F⁻ᵀe₂)`.
pub fn decay_vector(field: &MixedField, gprime: f64) -> ([f64; 2], [f64; 2]) {
    let avg = velocity_line_average(field, 0.0);
    let tangential = avg[0] + gprime * avg[1];
    let normal = variational_flux(field, gprime, 0.0);
    let det = 1.0 + gprime * gprime;
    let cbl = [
        (tangential - gprime * normal) / det,
        (gprime * tangential + normal) / det,
    ];
    (cbl, avg)
}

/// Measures every reported quantity of a solved layer. The pressure of
/// `field` is shifted in place so that `κ_∞ = 0`.
pub fn analyze(mut field: MixedField, x1: f64, gprime: f64, kbl: [f64; 2]) -> BoundaryLayerSolution {
    let (bottom, top) = strip_extent(&field.mesh);
    let kappa_inf = layer_pressure_mean(&field, bottom);
    for p in field.pressure.iter_mut() {
        *p -= kappa_inf;
    }
    let (cbl, interface_average) = decay_vector(&field, gprime);
    let cnorm = cbl[0].hypot(cbl[1]);
    let residual = (cbl[1] - gprime * cbl[0]).abs();
    let normal_residual = if cnorm < 1e-12 { residual } else { residual / cnorm };
    let cbl_omega = traction_pressure_average(&field, gprime, 0.0);

    let metric = Metric::Frozen(gprime);
    let fluxes = (0..FLUX_DEPTHS.min((-bottom) as usize))
        .map(|k| {
            let z = -(k as f64);
            FluxSample {
                depth: z,
                variational: variational_flux(&field, gprime, z),
                line: forms::line_flux(&field, &metric, z),
            }
        })
        .collect();
    let mut pore_layer_norms = layer_gradient_norms(&field, bottom..0);
    pore_layer_norms.reverse();
    let free_layer_norms = layer_gradient_norms(&field, 0..top);
    let decay = decay_rate_fit(&pore_layer_norms);
    let heights = [top as f64 - 1.0, top as f64 - 0.5];
    let far_field = FarField {
        heights,
        omega: [
            pressure_line_average(&field, heights[0]),
            pressure_line_average(&field, heights[1]),
        ],
        beta: velocity_line_average(&field, heights[0]),
    };
    BoundaryLayerSolution {
        x1,
        gprime,
        kbl,
        field,
        cbl,
        cbl_omega,
        kappa_inf,
        interface_average,
        normal_residual,
        fluxes,
        pore_layer_norms,
        free_layer_norms,
        decay,
        far_field,
        truncation_delta: None,
    }
}

/// Direct solve of one layer with jump `kbl` at slope `g′(x₁)`.
pub fn solve_bl(
    spec: &CurveSpec,
    x1: f64,
    kbl: [f64; 2],
    strip: Arc<PeriodicMesh>,
) -> Result<BoundaryLayerSolution> {
    check_jump(kbl)?;
    let gprime = spec.gprime(x1);
    let system = StokesSystem::assemble(strip, Metric::Frozen(gprime), strip_setup())?;
    let sigma = move |_: f64| [-kbl[0], -kbl[1]];
    let field = system.solve(&Forcing {
        interface: Some(&sigma),
        ..Forcing::default()
    })?;
    Ok(analyze(field, x1, gprime, kbl))
}

fn check_jump(kbl: [f64; 2]) -> Result<()> {
    if kbl.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Data(format!("stress jump must be finite, got {kbl:?}")))
    }
}

/// Layers for unit jumps `K = e₁, e₂` at one slope; any other jump is
/// their linear combination.
#[derive(Clone, Debug)]
pub struct BoundaryLayerProblem {
    pub gprime: f64,
    pub canonical: [MixedField; 2],
}

impl BoundaryLayerProblem {
    /// Two solves sharing one factorization.
    pub fn solve(strip: Arc<PeriodicMesh>, gprime: f64) -> Result<Self> {
        let system = StokesSystem::assemble(strip, Metric::Frozen(gprime), strip_setup())?;
        let s1 = |_: f64| [-1.0, 0.0];
        let s2 = |_: f64| [0.0, -1.0];
        let w1 = system.solve(&Forcing {
            interface: Some(&s1),
            ..Forcing::default()
        })?;
        let w2 = system.solve(&Forcing {
            interface: Some(&s2),
            ..Forcing::default()
        })?;
        Ok(BoundaryLayerProblem {
            gprime,
            canonical: [w1, w2],
        })
    }

    /// `K₁(β¹, ω¹) + K₂(β², ω²)`.
    pub fn field(&self, kbl: [f64; 2]) -> MixedField {
        let [a, b] = &self.canonical;
        let mut f = a.scaled(kbl[0]);
        for (v, w) in f.velocity.iter_mut().zip(&b.velocity) {
            v[0] += kbl[1] * w[0];
            v[1] += kbl[1] * w[1];
        }
        for (p, q) in f.pressure.iter_mut().zip(&b.pressure) {
            *p += kbl[1] * q;
        }
        f.residual = a.residual.max(b.residual);
        f
    }

    pub fn solution(&self, x1: f64, kbl: [f64; 2]) -> BoundaryLayerSolution {
        analyze(self.field(kbl), x1, self.gprime, kbl)
    }

    /// `C^bl` for jump `kbl` without the full report.
    pub fn cbl(&self, kbl: [f64; 2]) -> [f64; 2] {
        decay_vector(&self.field(kbl), self.gprime).0
    }
}

/// Layer solutions for `(x₁, K^bl)` samples. One pair of canonical solves
/// per distinct slope, run concurrently; with `deep` the truncation delta
/// of every sample is measured against the deeper strip.
pub fn boundary_layers(
    spec: &CurveSpec,
    samples: &[(f64, [f64; 2])],
    strip: Arc<PeriodicMesh>,
    deep: Option<Arc<PeriodicMesh>>,
) -> Result<Vec<BoundaryLayerSolution>> {
    for (_, k) in samples {
        check_jump(*k)?;
    }
    let mut slopes: Vec<(i64, f64)> = Vec::new();
    for &(x, _) in samples {
        let gp = spec.gprime(x);
        let key = slope_key(gp);
        if !slopes.iter().any(|(k, _)| *k == key) {
            slopes.push((key, gp));
        }
    }
    type Solved = (i64, BoundaryLayerProblem, Option<BoundaryLayerProblem>);
    let solved: Vec<Solved> = slopes
        .par_iter()
        .map(|&(key, gp)| {
            let p = BoundaryLayerProblem::solve(strip.clone(), gp)?;
            let d = match &deep {
                Some(m) => Some(BoundaryLayerProblem::solve(m.clone(), gp)?),
                None => None,
            };
            Ok((key, p, d))
        })
        .collect::<Result<_>>()?;
    let cache: HashMap<i64, (BoundaryLayerProblem, Option<BoundaryLayerProblem>)> =
        solved.into_iter().map(|(k, p, d)| (k, (p, d))).collect();
    samples
        .par_iter()
        .map(|&(x, kbl)| {
            let (p, d) = &cache[&slope_key(spec.gprime(x))];
            let mut sol = p.solution(x, kbl);
            if let Some(d) = d {
                sol.truncation_delta = Some(relative_change(sol.cbl, d.cbl(kbl)));
            }
            Ok(sol)
        })
        .collect()
}

/// `|b − a| / |b|`, or the absolute change when `b` vanishes.
pub fn relative_change(a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = (b[0] - a[0]).hypot(b[1] - a[1]);
    let n = b[0].hypot(b[1]);
    if n < 1e-12 {
        d
    } else {
        d / n
    }
}

/// `(C^bl, C^bl_ω)` after checking them against the far-field plane
/// averages high in the free layer.
pub fn decay_constants(sol: &BoundaryLayerSolution) -> Result<([f64; 2], f64)> {
    let delta = sol.truncation_delta.unwrap_or(0.0).max(1e-8);
    let c = sol.cbl;
    let scale = c[0].hypot(c[1]).max(sol.cbl_omega.abs()).max(1e-12);
    let allowed = 10.0 * delta * scale;
    let far = sol.far_field.beta;
    let dv = (far[0] - c[0]).hypot(far[1] - c[1]);
    if dv > allowed {
        return Err(Error::TruncationTooShallow {
            interface: c[0].hypot(c[1]),
            far_field: far[0].hypot(far[1]),
            allowed,
        });
    }
    let dp = (sol.far_field.omega[0] - sol.cbl_omega).abs();
    if dp > allowed {
        return Err(Error::TruncationTooShallow {
            interface: sol.cbl_omega,
            far_field: sol.far_field.omega[0],
            allowed,
        });
    }
    Ok((c, sol.cbl_omega))
}

/// `C^bl` at several pore depths.
#[derive(Clone, Debug, PartialEq)]
pub struct TruncationStudy {
    /// `(n_pore_layers, C^bl, C^bl_ω)` in the order given.
    pub rows: Vec<(usize, [f64; 2], f64)>,
    /// Relative change between the two deepest strips.
    pub delta: Option<f64>,
}

pub fn truncation_study(
    spec: &CurveSpec,
    x1: f64,
    kbl: [f64; 2],
    inclusion: &InclusionSpec,
    strip: StripSpec,
    depths: &[usize],
) -> Result<TruncationStudy> {
    if depths.is_empty() {
        return Err(Error::Config("truncation study needs at least one depth".into()));
    }
    let rows = depths
        .par_iter()
        .map(|&n| {
            let mesh = StripSpec {
                n_pore_layers: n,
                ..strip
            }
            .build(inclusion)?;
            let s = solve_bl(spec, x1, kbl, Arc::new(mesh))?;
            Ok((n, s.cbl, s.cbl_omega))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by_key(|&i| rows[i].0);
    let delta = (order.len() >= 2).then(|| {
        let a = rows[order[order.len() - 2]].1;
        let b = rows[order[order.len() - 1]].1;
        relative_change(a, b)
    });
    Ok(TruncationStudy { rows, delta })
}

#[cfg(test)]
mod tests;
