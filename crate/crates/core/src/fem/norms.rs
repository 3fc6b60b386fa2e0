//! Integral norms of finite-element fields, including Fourier-based
//! fractional norms of traces on a periodic line.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use super::element::TriGeom;
use super::field::{MixedField, ScalarField};
use super::locate::Locator;
use super::quadrature::{degree6, gauss3};
use crate::geometry::{BoundaryTag, PeriodicMesh};

/// Points per period used for Fourier trace norms.
pub const FOURIER_POINTS: usize = 256;

/// `∫ f(t, geom, λ, x) dx` over all triangles with the degree-6 rule.
pub fn integrate<F>(mesh: &PeriodicMesh, mut f: F) -> f64
where
    F: FnMut(usize, &TriGeom, [f64; 3], [f64; 2]) -> f64,
{
    let rule = degree6();
    let mut total = 0.0;
    for t in 0..mesh.triangles.len() {
        let g = TriGeom::new(mesh, t);
        let mut s = 0.0;
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            s += w * f(t, &g, *l, g.point(*l));
        }
        total += s * g.area;
    }
    total
}

/// `∫ u dx` for the velocity.
pub fn velocity_integral(u: &MixedField) -> [f64; 2] {
    let a = integrate(&u.mesh, |t, _, l, _| u.velocity_at(t, l)[0]);
    let b = integrate(&u.mesh, |t, _, l, _| u.velocity_at(t, l)[1]);
    [a, b]
}

pub fn velocity_l2(u: &MixedField) -> f64 {
    integrate(&u.mesh, |t, _, l, _| {
        let v = u.velocity_at(t, l);
        v[0] * v[0] + v[1] * v[1]
    })
    .sqrt()
}

/// `‖∇u‖_{L²}`.
pub fn velocity_h1_semi(u: &MixedField) -> f64 {
    integrate(&u.mesh, |t, g, l, _| {
        let d = u.velocity_grad_at(t, g, l);
        d[0][0] * d[0][0] + d[0][1] * d[0][1] + d[1][0] * d[1][0] + d[1][1] * d[1][1]
    })
    .sqrt()
}

pub fn velocity_h1(u: &MixedField) -> f64 {
    velocity_l2(u).hypot(velocity_h1_semi(u))
}

/// Interpolation bound `‖u‖_{L²}^{1/2} ‖u‖_{H¹}^{1/2}` for the `H^{1/2}` norm.
pub fn velocity_h_half(u: &MixedField) -> f64 {
    (velocity_l2(u) * velocity_h1(u)).sqrt()
}

/// `∫ Σ_{ik} |∂_i u_k| dx`.
pub fn velocity_grad_l1(u: &MixedField) -> f64 {
    integrate(&u.mesh, |t, g, l, _| {
        let d = u.velocity_grad_at(t, g, l);
        d[0][0].abs() + d[0][1].abs() + d[1][0].abs() + d[1][1].abs()
    })
}

/// `‖|x₂|^{1/2} ∇u‖_{L²}`.
pub fn velocity_weighted_grad(u: &MixedField) -> f64 {
    integrate(&u.mesh, |t, g, l, x| {
        let d = u.velocity_grad_at(t, g, l);
        x[1].abs() * (d[0][0] * d[0][0] + d[0][1] * d[0][1] + d[1][0] * d[1][0] + d[1][1] * d[1][1])
    })
    .sqrt()
}

pub fn pressure_l2(u: &MixedField) -> f64 {
    integrate(&u.mesh, |t, _, l, _| u.pressure_at(t, l).powi(2)).sqrt()
}

pub fn pressure_l1(u: &MixedField) -> f64 {
    integrate(&u.mesh, |t, _, l, _| u.pressure_at(t, l).abs())
}

/// `‖|x₂|^{1/2} p‖_{L²}`.
pub fn pressure_weighted(u: &MixedField) -> f64 {
    integrate(&u.mesh, |t, _, l, x| x[1].abs() * u.pressure_at(t, l).powi(2)).sqrt()
}

/// `‖u‖_{L²}` restricted to the edges carrying `tag`.
pub fn velocity_l2_on(u: &MixedField, tag: BoundaryTag) -> f64 {
    let mesh = &u.mesh;
    let (xs, ws) = gauss3();
    let nv = mesh.n_vertices();
    let lookup = crate::geometry::EdgeLookup::new(mesh);
    let mut total = 0.0;
    for e in mesh.edges_with_tag(tag) {
        let [a, b] = e.nodes;
        let Some(m) = lookup.get(a, b) else { continue };
        let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
        let len = (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
        let vals = [u.velocity[a], u.velocity[b], u.velocity[nv + m]];
        for (s, w) in xs.iter().zip(&ws) {
            let phi = super::element::p2_edge_values(*s);
            let mut v = [0.0; 2];
            for i in 0..3 {
                v[0] += phi[i] * vals[i][0];
                v[1] += phi[i] * vals[i][1];
            }
            total += w * len * (v[0] * v[0] + v[1] * v[1]);
        }
    }
    total.sqrt()
}

/// `∫ f dx₁` along the mesh line `x₂ = level`, edge by edge, with `f`
/// evaluated (triangle, barycentric coordinates, abscissa) in the adjacent
/// triangle above or below the line.
pub fn line_integral<F>(mesh: &PeriodicMesh, level: f64, above: bool, mut f: F) -> f64
where
    F: FnMut(usize, [f64; 3], f64) -> f64,
{
    let (xs, ws) = gauss3();
    let tol = 1e-10 * mesh.cell_size.max(1.0);
    let mut total = 0.0;
    for (t, &tri) in mesh.triangles.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
            if (pa[1] - level).abs() > tol || (pb[1] - level).abs() > tol {
                continue;
            }
            let c = mesh.nodes[tri[(k + 2) % 3]][1];
            if (c > level) != above {
                continue;
            }
            for (s, w) in xs.iter().zip(&ws) {
                let mut l = [0.0; 3];
                l[k] = 1.0 - s;
                l[(k + 1) % 3] = *s;
                let x1 = pa[0] + s * (pb[0] - pa[0]);
                total += w * (pb[0] - pa[0]).abs() * f(t, l, x1);
            }
        }
    }
    total
}

/// Samples of a trace at `FOURIER_POINTS` equispaced abscissae of
/// `[0, period)` on the line `x₂ = 0`.
pub fn sample_line<F>(period: f64, mut f: F) -> Vec<f64>
where
    F: FnMut(f64) -> f64,
{
    (0..FOURIER_POINTS)
        .map(|i| f(period * i as f64 / FOURIER_POINTS as f64))
        .collect()
}

/// Periodic Sobolev norm `(L Σ_m (1 + k_m²)^s |v̂_m|²)^{1/2}` of equispaced
/// samples on `[0, L)`, with `v̂_m = N⁻¹ Σ v_j e^{-i k_m x_j}`, `k_m = 2πm/L`.
/// With this scaling `s = 0` is the `L²` norm and a constant `c` has norm
/// `|c| √L` for every `s`.
pub fn fourier_norm(samples: &[f64], period: f64, s: f64) -> f64 {
    let n = samples.len();
    if n == 0 {
        return 0.0;
    }
    let mut buf: Vec<Complex<f64>> = samples.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mut total = 0.0;
    for (j, c) in buf.iter().enumerate() {
        let m = if j <= n / 2 { j as f64 } else { j as f64 - n as f64 };
        let k = 2.0 * std::f64::consts::PI * m / period;
        let coef = c / n as f64;
        total += (1.0 + k * k).powf(s) * coef.norm_sqr();
    }
    (period * total).sqrt()
}

/// `H^{-1/2}` norm of the vector trace of a velocity on `x₂ = 0`.
pub fn velocity_hm_half_on_line(u: &MixedField, locator: &Locator, period: f64) -> f64 {
    let mut comps = [Vec::new(), Vec::new()];
    for i in 0..FOURIER_POINTS {
        let x = period * i as f64 / FOURIER_POINTS as f64;
        let v = u.eval(locator, [x, 0.0]).map_or([0.0; 2], |r| r.0);
        comps[0].push(v[0]);
        comps[1].push(v[1]);
    }
    fourier_norm(&comps[0], period, -0.5).hypot(fourier_norm(&comps[1], period, -0.5))
}

/// `∫ |v|² dx` of a quadratic scalar field.
pub fn scalar_l2(v: &ScalarField) -> f64 {
    integrate(&v.mesh, |t, _, l, _| v.value_at(t, l).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_trace_has_only_zero_mode() {
        let s = vec![2.0; FOURIER_POINTS];
        let n = fourier_norm(&s, 3.0, -0.5);
        assert!((n - 2.0 * 3.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn zero_order_norm_is_l2() {
        let l = 2.0;
        let s = sample_line(l, |x| (2.0 * std::f64::consts::PI * 3.0 * x / l).sin() + 0.5);
        // ∫ (sin + 0.5)² = L/2 + L/4.
        let expect = (l * 0.75f64).sqrt();
        assert!((fourier_norm(&s, l, 0.0) - expect).abs() < 1e-12);
        let k = 2.0 * std::f64::consts::PI * 3.0 / l;
        let hm = (l * (0.25 + 0.5 / (1.0 + k * k).sqrt())).sqrt();
        assert!((fourier_norm(&s, l, -0.5) - hm).abs() < 1e-12);
    }
}
