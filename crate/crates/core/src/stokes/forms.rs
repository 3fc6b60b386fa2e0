//! Bilinear forms and flux functionals evaluated on nodal velocity vectors.

use super::Metric;
use crate::fem::element::{p2_grads, TriGeom};
use crate::fem::MixedField;
use crate::geometry::PeriodicMesh;

fn element_grad(
    mesh: &PeriodicMesh,
    u: &[[f64; 2]],
    t: usize,
    d: &[[f64; 2]; 6],
) -> [[f64; 2]; 2] {
    let nodes = mesh.p2_nodes(t);
    let mut g = [[0.0; 2]; 2];
    for a in 0..6 {
        for i in 0..2 {
            for k in 0..2 {
                g[i][k] += d[a][i] * u[nodes[a]][k];
            }
        }
    }
    g
}

/// `a(u,v) = Σ_k ∫ ∇u_k · F⁻¹F⁻ᵀ ∇v_k` for nodal P2 vectors.
pub fn bilinear_a(mesh: &PeriodicMesh, metric: &Metric, u: &[[f64; 2]], v: &[[f64; 2]]) -> f64 {
    let rule = metric.rule();
    let mut total = 0.0;
    for t in 0..mesh.triangles.len() {
        let geom = TriGeom::new(mesh, t);
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let gp = metric.slope(geom.point(*l)[0]);
            let m = [[1.0, -gp], [-gp, 1.0 + gp * gp]];
            let d = p2_grads(*l, &geom.grad_lambda);
            let gu = element_grad(mesh, u, t, &d);
            let gv = element_grad(mesh, v, t, &d);
            let mut s = 0.0;
            for k in 0..2 {
                let mu = [
                    m[0][0] * gu[0][k] + m[0][1] * gu[1][k],
                    m[1][0] * gu[0][k] + m[1][1] * gu[1][k],
                ];
                s += mu[0] * gv[0][k] + mu[1] * gv[1][k];
            }
            total += w * geom.area * s;
        }
    }
    total
}

/// `∫ ∇u : ∇v` for nodal P2 vectors.
pub fn grad_inner(mesh: &PeriodicMesh, u: &[[f64; 2]], v: &[[f64; 2]]) -> f64 {
    bilinear_a(mesh, &Metric::identity(), u, v)
}

/// `∫ ∇q · F⁻¹u` for a P1 function `q` given by vertex values.
///
/// When `q` equals one below a mesh line and zero above it except for a
/// one-element ramp, `-∫ ∇q · F⁻¹u` is the average of the line fluxes
/// `∫ u·F⁻ᵀe₂` across the ramp band; for a discretely divergence-free field
/// it equals the boundary flux of `q F⁻¹u`, which is how the discrete
/// solution sees mass conservation.
pub fn grad_q_dot_piola(field: &MixedField, metric: &Metric, q: &[f64]) -> f64 {
    let mesh = &field.mesh;
    let rule = metric.rule();
    let mut total = 0.0;
    for t in 0..mesh.triangles.len() {
        let tri = mesh.triangles[t];
        let (qa, qb, qc) = (q[tri[0]], q[tri[1]], q[tri[2]]);
        if qa == qb && qb == qc {
            continue;
        }
        let geom = TriGeom::new(mesh, t);
        let gl = geom.grad_lambda;
        let gq = [
            qa * gl[0][0] + qb * gl[1][0] + qc * gl[2][0],
            qa * gl[0][1] + qb * gl[1][1] + qc * gl[2][1],
        ];
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let gp = metric.slope(geom.point(*l)[0]);
            let u = field.velocity_at(t, *l);
            // F⁻¹u = (u1, u2 - g' u1).
            total += w * geom.area * (gq[0] * u[0] + gq[1] * (u[1] - gp * u[0]));
        }
    }
    total
}

/// `∫ q div(F⁻¹u)` for a P1 function `q` given by vertex values.
pub fn q_div_piola(field: &MixedField, metric: &Metric, q: &[f64]) -> f64 {
    let mesh = &field.mesh;
    let rule = metric.rule();
    let mut total = 0.0;
    for t in 0..mesh.triangles.len() {
        let tri = mesh.triangles[t];
        let geom = TriGeom::new(mesh, t);
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let gp = metric.slope(geom.point(*l)[0]);
            let g = field.velocity_grad_at(t, &geom, *l);
            let div = g[0][0] - gp * g[1][0] + g[1][1];
            let qv = l[0] * q[tri[0]] + l[1] * q[tri[1]] + l[2] * q[tri[2]];
            total += w * geom.area * qv * div;
        }
    }
    total
}

/// `∫ u·F⁻ᵀe₂ dx₁` along the mesh line `x₂ = level`, evaluated edge by edge
/// on the edges lying on that line (from the triangles below it).
pub fn line_flux(field: &MixedField, metric: &Metric, level: f64) -> f64 {
    crate::fem::norms::line_integral(&field.mesh, level, false, |t, l, x1| {
        let u = field.velocity_at(t, l);
        u[1] - metric.slope(x1) * u[0]
    })
}
