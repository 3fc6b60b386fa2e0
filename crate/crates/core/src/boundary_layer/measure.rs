//! Functionals of a boundary-layer field on the strip: interface and plane
//! averages, band averages, discrete fluxes and layer norms.

use crate::fem::element::TriGeom;
use crate::fem::norms::line_integral;
use crate::fem::quadrature::degree4;
use crate::fem::MixedField;
use crate::geometry::PeriodicMesh;
use crate::stokes::{forms, Metric};

/// `∫ f` over triangles whose centroid height lies in `(lo, hi)`.
pub(crate) fn integrate_band<F>(mesh: &PeriodicMesh, lo: f64, hi: f64, mut f: F) -> f64
where
    F: FnMut(usize, &TriGeom, [f64; 3]) -> f64,
{
    let rule = degree4();
    let mut total = 0.0;
    for t in 0..mesh.triangles.len() {
        let y = mesh.centroid(t)[1];
        if y <= lo || y >= hi {
            continue;
        }
        let g = TriGeom::new(mesh, t);
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            total += w * g.area * f(t, &g, *l);
        }
    }
    total
}

/// Line average of the velocity on `y₂ = level` (unit period).
pub fn velocity_line_average(field: &MixedField, level: f64) -> [f64; 2] {
    let m = &field.mesh;
    [
        line_integral(m, level, true, |t, l, _| field.velocity_at(t, l)[0]),
        line_integral(m, level, true, |t, l, _| field.velocity_at(t, l)[1]),
    ]
}

/// Line average of the pressure on `y₂ = level`.
pub fn pressure_line_average(field: &MixedField, level: f64) -> f64 {
    line_integral(&field.mesh, level, true, |t, l, _| field.pressure_at(t, l))
}

/// Height of the first row of vertices above `level`.
pub(crate) fn next_row(mesh: &PeriodicMesh, level: f64) -> f64 {
    mesh.nodes
        .iter()
        .map(|p| p[1])
        .filter(|&y| y > level + 1e-12)
        .fold(f64::INFINITY, f64::min)
}

/// Pressure average over the row of elements `(level, next row)` corrected
/// by the viscous normal stress so that it matches the discrete momentum
/// balance against test functions `ψ(y₂)F⁻ᵀe₂`:
///
/// ```text
/// ⟨ω⟩ − ⟨(M∇β₂ − g′M∇β₁)·e₂⟩ / (1 + g′²)
/// ```
///
/// Above the interface this is the plane average of the pressure seen by
/// the discrete equations; its continuous counterpart is independent of
/// the height.
pub fn traction_pressure_average(field: &MixedField, gprime: f64, level: f64) -> f64 {
    let mesh = &field.mesh;
    let top = next_row(mesh, level);
    let delta = top - level;
    let m = [[1.0, -gprime], [-gprime, 1.0 + gprime * gprime]];
    let omega = integrate_band(mesh, level, top, |t, _, l| field.pressure_at(t, l));
    let visc = integrate_band(mesh, level, top, |t, g, l| {
        let d = field.velocity_grad_at(t, g, l);
        // (M∇β_k)·e₂ = m[1][0] ∂₁β_k + m[1][1] ∂₂β_k.
        let n1 = m[1][0] * d[0][0] + m[1][1] * d[1][0];
        let n2 = m[1][0] * d[0][1] + m[1][1] * d[1][1];
        n2 - gprime * n1
    });
    (omega - visc / (1.0 + gprime * gprime)) / delta
}

/// Discrete flux `−∫ ∇q·F⁻¹β` for the vertex indicator `q` of `y₂ ≤ z`:
/// the average of the line fluxes `∫₀¹ β·F⁻ᵀe₂ dy₁` over the element row
/// just above `z`, as tested by the mass equation.
pub fn variational_flux(field: &MixedField, gprime: f64, z: f64) -> f64 {
    let q: Vec<f64> = field
        .mesh
        .nodes
        .iter()
        .map(|p| if p[1] <= z + 1e-12 { 1.0 } else { 0.0 })
        .collect();
    -forms::grad_q_dot_piola(field, &Metric::Frozen(gprime), &q)
}

/// `‖∇β‖_{L²}` over the unit layers `(j, j+1)` for `j` in `range`.
pub fn layer_gradient_norms(field: &MixedField, range: std::ops::Range<i32>) -> Vec<f64> {
    range
        .map(|j| {
            integrate_band(&field.mesh, j as f64, j as f64 + 1.0, |t, g, l| {
                let d = field.velocity_grad_at(t, g, l);
                d[0][0] * d[0][0] + d[0][1] * d[0][1] + d[1][0] * d[1][0] + d[1][1] * d[1][1]
            })
            .sqrt()
        })
        .collect()
}

/// Mean pressure over the fluid part of the layer `(j, j+1)`.
pub fn layer_pressure_mean(field: &MixedField, j: i32) -> f64 {
    let (lo, hi) = (j as f64, j as f64 + 1.0);
    let area = integrate_band(&field.mesh, lo, hi, |_, _, _| 1.0);
    if area == 0.0 {
        return 0.0;
    }
    integrate_band(&field.mesh, lo, hi, |t, _, l| field.pressure_at(t, l)) / area
}
