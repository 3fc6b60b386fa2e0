//! Effective Darcy pressure in the porous part below `Σ`.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::element::{p2_grads, TriGeom};
use crate::fem::norms::line_integral;
use crate::fem::quadrature::degree6;
use crate::fem::{DofMap, PatternBuilder, ScalarField};
use crate::geometry::{BoundaryTag, PeriodicMesh};
use crate::transform::CurveSpec;

use super::EffectiveCoefficients;

#[derive(Clone, Debug)]
pub struct DarcySolution {
    pub pressure: ScalarField,
    /// `∫_Σ v·F⁻ᵀe₂` tested against the discrete equations (the residual of
    /// the interface rows). Zero up to the solver residual.
    pub sigma_flux: f64,
    /// The same flux integrated pointwise along `Σ`.
    pub sigma_line_flux: f64,
    pub residual: f64,
}

/// Darcy velocity `v = A(f − F⁻ᵀ∇p̃)` at a point of triangle `t`; `force`
/// takes flat coordinates.
pub fn darcy_velocity(
    spec: &CurveSpec,
    force: &(dyn Fn([f64; 2]) -> [f64; 2] + Sync),
    coeffs: &EffectiveCoefficients,
    p: &ScalarField,
    t: usize,
    geom: &TriGeom,
    l: [f64; 3],
) -> [f64; 2] {
    let x = geom.point(l);
    let gp = spec.gprime(x[0]);
    let a = coeffs.a_at(x[0]);
    let f = force(x);
    let d = p.grad_at(t, geom, l);
    // F⁻ᵀ∇p = (∂₁p − g′∂₂p, ∂₂p).
    let r = [f[0] - (d[0] - gp * d[1]), f[1] - d[1]];
    [a[0][0] * r[0] + a[0][1] * r[1], a[1][0] * r[0] + a[1][1] * r[1]]
}

fn check_spd(a: &[[f64; 2]; 2], x1: f64) -> Result<()> {
    let s = 0.5 * (a[0][1] + a[1][0]);
    let (lo, _) = crate::cell::symmetric_eigenvalues(&[[a[0][0], s], [s, a[1][1]]]);
    if lo > 0.0 && lo.is_finite() {
        Ok(())
    } else {
        Err(Error::NumericalQuality(format!(
            "interpolated permeability at x1 = {x1:.4} is not positive definite \
             (smallest eigenvalue {lo:.3e}); sample the cell problems more densely"
        )))
    }
}

/// Solves `div(F⁻¹A(f − F⁻ᵀ∇p̃)) = 0` on a mesh of `(0,L) × (−K,0)` with
/// `p̃ = trace(x₁)` on edges tagged `Interface` and no flux on the bottom.
pub fn solve_darcy(
    spec: &CurveSpec,
    force: &(dyn Fn([f64; 2]) -> [f64; 2] + Sync),
    coeffs: &EffectiveCoefficients,
    trace: &dyn Fn(f64) -> f64,
    mesh: Arc<PeriodicMesh>,
) -> Result<DarcySolution> {
    let dofs = DofMap::quadratic(&mesh, &[BoundaryTag::Interface]);
    let n = dofs.n_free;
    let mut pattern = PatternBuilder::new(n);
    let idx = |t: usize| mesh.p2_nodes(t).map(|v| dofs.index[v]);
    for t in 0..mesh.triangles.len() {
        let i = idx(t);
        pattern.add_block(&i, &i);
    }
    let mut matrix = pattern.build();
    let mut rhs = vec![0.0; n];
    let mut fixed = vec![0.0; mesh.n_p2_nodes()];
    for &v in &dofs.constrained {
        fixed[v] = trace(mesh.p2_point(v)[0]);
    }
    let rule = degree6();
    for t in 0..mesh.triangles.len() {
        let geom = TriGeom::new(&mesh, t);
        let nodes = mesh.p2_nodes(t);
        let i = idx(t);
        let mut k = [[0.0; 6]; 6];
        let mut b = [0.0; 6];
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let w = w * geom.area;
            let x = geom.point(*l);
            let gp = spec.gprime(x[0]);
            let a = coeffs.a_at(x[0]);
            check_spd(&a, x[0])?;
            // B = F⁻¹AF⁻ᵀ with F⁻¹ = [[1,0],[−g′,1]].
            let fa = [a[0], [a[1][0] - gp * a[0][0], a[1][1] - gp * a[0][1]]];
            let bm = [
                [fa[0][0], fa[0][1] - gp * fa[0][0]],
                [fa[1][0], fa[1][1] - gp * fa[1][0]],
            ];
            let f = force(x);
            let faf = [fa[0][0] * f[0] + fa[0][1] * f[1], fa[1][0] * f[0] + fa[1][1] * f[1]];
            let d = p2_grads(*l, &geom.grad_lambda);
            for r in 0..6 {
                b[r] += w * (d[r][0] * faf[0] + d[r][1] * faf[1]);
                for c in 0..6 {
                    let bd = [
                        bm[0][0] * d[c][0] + bm[0][1] * d[c][1],
                        bm[1][0] * d[c][0] + bm[1][1] * d[c][1],
                    ];
                    k[r][c] += w * (d[r][0] * bd[0] + d[r][1] * bd[1]);
                }
            }
        }
        for r in 0..6 {
            let Some(row) = i[r] else { continue };
            rhs[row] += b[r];
            for c in 0..6 {
                match i[c] {
                    Some(col) => matrix.add(row, col, k[r][c]),
                    None => rhs[row] -= k[r][c] * fixed[nodes[c]],
                }
            }
        }
    }
    let (x, residual) = matrix.factor()?.solve(&rhs)?;
    let values: Vec<f64> = (0..mesh.n_p2_nodes())
        .map(|v| dofs.index[v].map_or(fixed[v], |r| x[r]))
        .collect();
    let pressure = ScalarField {
        mesh: mesh.clone(),
        values,
    };

    // Flux through Σ as seen by the weak form: test with the sum of the
    // basis functions of the interface nodes.
    let on_sigma: Vec<f64> = (0..mesh.n_p2_nodes())
        .map(|v| if dofs.is_constrained(v) { 1.0 } else { 0.0 })
        .collect();
    let mut sigma_flux = 0.0;
    for t in 0..mesh.triangles.len() {
        let nodes = mesh.p2_nodes(t);
        if nodes.iter().all(|&v| on_sigma[v] == 0.0) {
            continue;
        }
        let geom = TriGeom::new(&mesh, t);
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let d = p2_grads(*l, &geom.grad_lambda);
            let mut gq = [0.0; 2];
            for r in 0..6 {
                gq[0] += on_sigma[nodes[r]] * d[r][0];
                gq[1] += on_sigma[nodes[r]] * d[r][1];
            }
            let gp = spec.gprime(geom.point(*l)[0]);
            let v = darcy_velocity(spec, force, coeffs, &pressure, t, &geom, *l);
            // ∇q·F⁻¹v with F⁻¹v = (v₁, v₂ − g′v₁).
            sigma_flux += w * geom.area * (gq[0] * v[0] + gq[1] * (v[1] - gp * v[0]));
        }
    }
    let sigma_line_flux = line_integral(&mesh, 0.0, false, |t, l, x1| {
        let geom = TriGeom::new(&mesh, t);
        let v = darcy_velocity(spec, force, coeffs, &pressure, t, &geom, l);
        v[1] - spec.gprime(x1) * v[0]
    });
    Ok(DarcySolution {
        pressure,
        sigma_flux,
        sigma_line_flux,
        residual,
    })
}

/// Value of the Darcy pressure at `(x₁, 0⁻)`.
pub fn trace_value(p: &ScalarField, locator: &crate::fem::Locator, x1: f64) -> Option<f64> {
    let (t, l) = locator.locate([x1, 0.0])?;
    Some(p.value_at(t, l))
}

/// Largest `|v|` over the quadrature points of the porous mesh.
pub fn max_darcy_speed(
    spec: &CurveSpec,
    force: &(dyn Fn([f64; 2]) -> [f64; 2] + Sync),
    coeffs: &EffectiveCoefficients,
    p: &ScalarField,
) -> f64 {
    let rule = degree6();
    let mut m: f64 = 0.0;
    for t in 0..p.mesh.triangles.len() {
        let geom = TriGeom::new(&p.mesh, t);
        for l in &rule.points {
            let v = darcy_velocity(spec, force, coeffs, p, t, &geom, *l);
            m = m.max(v[0].hypot(v[1]));
        }
    }
    m
}
