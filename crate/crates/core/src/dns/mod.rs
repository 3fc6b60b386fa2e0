//! Direct microscale simulation on `Ω^ε` and its comparison with the
//! effective model over a sweep of scales.


use std::collections::BTreeMap;
use std::sync::Arc;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::effective::{self, darcy_velocity, EffectiveCoefficients, EffectiveSolution, FreeFlow};
use crate::error::{Error, Result};
use crate::fem::norms::{self, fourier_norm, sample_line};
use crate::fem::quadrature::gauss_legendre;
use crate::fem::{Gauge, Locator, MixedField};
use crate::fit::loglog_fit;
use crate::force::BodyForce;
use crate::geometry::{build_eps_mesh, cells_per, BoundaryTag, EpsMeshParams, InclusionSpec, PeriodicMesh, Region};
use crate::stokes::{Forcing, Metric, StokesSetup, StokesSystem};
use crate::transform::CurveSpec;

/// Elements per inclusion diameter below which a pore is reported as
/// under-resolved.
pub const MIN_PORE_RESOLUTION: f64 = 8.0;

/// Resolution of the microscale meshes, independent of `ε`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MicroParams {
    /// Height of the free part.
    pub height: f64,
    /// Depth of the porous part.
    pub k_depth: f64,
    /// Element size inside a pore cell, in cell units.
    pub h_micro: f64,
    /// Element size far above the interface.
    pub h_macro: f64,
    /// Rows of pore-resolved cells above `Σ`.
    pub band_layers: usize,
}

impl MicroParams {
    pub fn mesh_params(&self, spec: &CurveSpec, eps: f64) -> EpsMeshParams {
        EpsMeshParams {
            eps,
            length: spec.period,
            h_free: self.height,
            k_depth: self.k_depth,
            h_micro: self.h_micro,
            h_macro: self.h_macro,
            band_layers: self.band_layers,
        }
    }

    /// Rejects scales that do not tile the domain.
    pub fn check_eps(&self, spec: &CurveSpec, eps: f64) -> Result<()> {
        cells_per(spec.period, eps, "L")?;
        if self.k_depth > 0.0 {
            cells_per(self.k_depth, eps, "K_depth")?;
        }
        Ok(())
    }
}

/// Microscale solution with its restrictions to both sides of `Σ`.
#[derive(Clone, Debug)]
pub struct EpsSolution {
    pub eps: f64,
    pub field: MixedField,
    /// Restriction to `Ω₁`, pressure shifted to zero mean there.
    pub free: MixedField,
    /// Restriction to the pore space `Ω₂^ε`, if there is one.
    pub porous: Option<MixedField>,
    /// Elements per inclusion diameter.
    pub resolution: f64,
}

/// Transformed Stokes on `Ω^ε` with no-slip on every pore, the bottom and
/// the top.
pub fn solve_eps_problem(
    spec: &CurveSpec,
    force: &BodyForce,
    inclusion: &InclusionSpec,
    eps: f64,
    params: &MicroParams,
) -> Result<EpsSolution> {
    force.validate()?;
    params.check_eps(spec, eps)?;
    let resolution = 2.0 * (inclusion.area() / std::f64::consts::PI).sqrt() / params.h_micro;
    if resolution < MIN_PORE_RESOLUTION {
        warn!(
            "ε = {eps}: {resolution:.1} elements per inclusion diameter (h_micro = {}), \
             below the recommended {MIN_PORE_RESOLUTION}",
            params.h_micro
        );
    }
    let mesh = Arc::new(build_eps_mesh(inclusion, &params.mesh_params(spec, eps))?);
    let setup = StokesSetup {
        dirichlet: vec![BoundaryTag::Pore, BoundaryTag::Bottom, BoundaryTag::Top],
        gauge: Gauge::Pinned,
    };
    let system = StokesSystem::assemble(mesh.clone(), Metric::Curve(spec.clone()), setup)?;
    let period = spec.period;
    let body = move |x: [f64; 2]| force.eval(x, period);
    // Pinned rather than zero-mean for the same reason as in the free flow.
    let mut field = system.solve(&Forcing {
        body: Some(&body),
        ..Forcing::default()
    })?;
    field.normalize_pressure();
    let (sub, map) = mesh.restrict(Region::AboveS);
    let mut free = field.restrict(Arc::new(sub), &map);
    free.normalize_pressure();
    let porous = if params.k_depth > 0.0 {
        let (sub, map) = mesh.restrict(Region::BelowS);
        Some(field.restrict(Arc::new(sub), &map))
    } else {
        None
    };
    Ok(EpsSolution {
        eps,
        field,
        free,
        porous,
        resolution,
    })
}

/// Every error measure for one `ε`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorRecord {
    pub eps: f64,
    pub err_u_l2_o1: f64,
    pub err_u_h12_o1: f64,
    pub err_p_l1_o1: f64,
    pub err_gradu_l1_o1: f64,
    pub err_weighted_grad: f64,
    pub err_weighted_p: f64,
    pub err_u_l2_sigma: f64,
    pub err_u_hm12_sigma: f64,
    pub err_p_hm12_sigma: f64,
    pub u_l2_o2eps: f64,
    pub m_eps: f64,
    pub m_eff: f64,
    /// Relative `ℓ²` distance between cell averages of `ε⁻²u^ε` and of the
    /// Darcy velocity over the interior pore rows; `NaN` without rows.
    pub darcy_gap: f64,
}

impl ErrorRecord {
    pub fn mass_error(&self) -> f64 {
        (self.m_eps - self.m_eff).abs()
    }

    /// `‖u^ε‖_{L²(Ω₂^ε)} / ε²`.
    pub fn porous_ratio(&self) -> f64 {
        self.u_l2_o2eps / (self.eps * self.eps)
    }

    /// The measures fitted against `ε`, by name.
    pub fn measures(&self) -> Vec<(&'static str, f64)> {
        vec![
            ("err_u_L2_O1", self.err_u_l2_o1),
            ("err_u_H12_O1", self.err_u_h12_o1),
            ("err_p_L1_O1", self.err_p_l1_o1),
            ("err_gradu_L1_O1", self.err_gradu_l1_o1),
            ("err_weighted_grad", self.err_weighted_grad),
            ("err_weighted_p", self.err_weighted_p),
            ("err_u_L2_Sigma", self.err_u_l2_sigma),
            ("err_u_Hm12_Sigma", self.err_u_hm12_sigma),
            ("err_p_Hm12_Sigma", self.err_p_hm12_sigma),
            ("u_L2_O2eps", self.u_l2_o2eps),
            ("mass_error", self.mass_error()),
            ("darcy_gap", self.darcy_gap),
        ]
    }
}

fn same_mesh(a: &MixedField, b: &MixedField) -> bool {
    Arc::ptr_eq(&a.mesh, &b.mesh)
        || (a.mesh.nodes == b.mesh.nodes && a.mesh.triangles == b.mesh.triangles)
}

/// Cell averages of `ε⁻²u^ε` over every pore cell, keyed by lattice index.
fn cell_averages(porous: &MixedField, eps: f64) -> BTreeMap<[i32; 2], [f64; 2]> {
    let mut sums: BTreeMap<[i32; 2], [f64; 2]> = BTreeMap::new();
    let mesh = &porous.mesh;
    let rule = crate::fem::quadrature::degree4();
    for t in 0..mesh.triangles.len() {
        let Some(tile) = mesh.tiles[t] else { continue };
        let g = crate::fem::TriGeom::new(mesh, t);
        let e = sums.entry(tile).or_insert([0.0; 2]);
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let v = porous.velocity_at(t, *l);
            e[0] += w * g.area * v[0];
            e[1] += w * g.area * v[1];
        }
    }
    let scale = 1.0 / eps.powi(4);
    for v in sums.values_mut() {
        v[0] *= scale;
        v[1] *= scale;
    }
    sums
}

/// Distance between cell-averaged `ε⁻²u^ε` and the cell-averaged Darcy
/// velocity, relative to the latter, over pore rows away from `Σ` (and
/// away from the bottom wall when there are at least three rows).
pub fn darcy_gap(
    spec: &CurveSpec,
    force: &BodyForce,
    coeffs: &EffectiveCoefficients,
    porous: &MixedField,
    darcy: &crate::fem::ScalarField,
    eps: f64,
) -> f64 {
    let avgs = cell_averages(porous, eps);
    let rows = avgs.keys().map(|k| -k[1]).max().unwrap_or(0);
    let keep = |j: i32| {
        let r = -j;
        r >= 2 && (rows < 3 || r < rows)
    };
    let locator = Locator::new(&darcy.mesh);
    let (xs, ws) = gauss_legendre(4);
    let body = |x: [f64; 2]| force.eval(x, spec.period);
    let (mut diff, mut size) = (0.0, 0.0);
    for (key, avg) in &avgs {
        if !keep(key[1]) {
            continue;
        }
        let (x0, y0) = (key[0] as f64 * eps, key[1] as f64 * eps);
        let mut v = [0.0; 2];
        for (a, wa) in xs.iter().zip(&ws) {
            for (b, wb) in xs.iter().zip(&ws) {
                let p = [x0 + a * eps, y0 + b * eps];
                let Some((t, l)) = locator.locate(p) else { continue };
                let g = crate::fem::TriGeom::new(&darcy.mesh, t);
                let d = darcy_velocity(spec, &body, coeffs, darcy, t, &g, l);
                v[0] += wa * wb * d[0];
                v[1] += wa * wb * d[1];
            }
        }
        diff += (avg[0] - v[0]).powi(2) + (avg[1] - v[1]).powi(2);
        size += v[0] * v[0] + v[1] * v[1];
    }
    if size == 0.0 {
        f64::NAN
    } else {
        (diff / size).sqrt()
    }
}

/// Compares a microscale solution with the effective solution computed on
/// its free-part submesh.
pub fn error_report(ueps: &EpsSolution, eff: &EffectiveSolution, force: &BodyForce) -> Result<ErrorRecord> {
    if !same_mesh(&ueps.free, &eff.ueff_peff) {
        return Err(Error::Config(
            "the effective solution must live on the free-part submesh of the microscale mesh".into(),
        ));
    }
    let spec = &eff.coeffs.spec;
    let d = ueps.free.difference(&eff.ueff_peff);
    let locator = Locator::new(&d.mesh);
    let ptrace = sample_line(spec.period, |x| effective::interface_pressure(&d, &locator, x));
    let porous = ueps.porous.as_ref();
    Ok(ErrorRecord {
        eps: ueps.eps,
        err_u_l2_o1: norms::velocity_l2(&d),
        err_u_h12_o1: norms::velocity_h_half(&d),
        err_p_l1_o1: norms::pressure_l1(&d),
        err_gradu_l1_o1: norms::velocity_grad_l1(&d),
        err_weighted_grad: norms::velocity_weighted_grad(&d),
        err_weighted_p: norms::pressure_weighted(&d),
        err_u_l2_sigma: norms::velocity_l2_on(&d, BoundaryTag::Interface),
        err_u_hm12_sigma: norms::velocity_hm_half_on_line(&d, &locator, spec.period),
        err_p_hm12_sigma: fourier_norm(&ptrace, spec.period, -0.5),
        u_l2_o2eps: porous.map_or(0.0, norms::velocity_l2),
        m_eps: effective::mass_flow(&ueps.free, spec),
        m_eff: eff.m_eff,
        darcy_gap: porous.map_or(f64::NAN, |p| {
            darcy_gap(spec, force, &eff.coeffs, p, &eff.darcy_p, ueps.eps)
        }),
    })
}

/// Microscale and effective solutions for one scale, compared.
pub fn compare_at(
    spec: &CurveSpec,
    force: &BodyForce,
    inclusion: &InclusionSpec,
    coeffs: Arc<EffectiveCoefficients>,
    porous_mesh: Arc<PeriodicMesh>,
    eps: f64,
    params: &MicroParams,
) -> Result<(ErrorRecord, EffectiveSolution)> {
    let ueps = solve_eps_problem(spec, force, inclusion, eps, params)?;
    let flow = FreeFlow::new(spec, ueps.free.mesh.clone())?;
    let u0 = flow.solve_u0(force)?;
    let eff = effective::solve_effective(&flow, &u0, force, coeffs, eps, porous_mesh)?;
    Ok((error_report(&ueps, &eff, force)?, eff))
}

/// Log-log fit of one measure against `ε`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub name: String,
    pub rate: f64,
    pub r2: f64,
    /// Strictly decreasing as `ε` decreases.
    pub monotone: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub eps_list: Vec<f64>,
    pub records: Vec<ErrorRecord>,
    pub rates: Vec<RateFit>,
}

impl ConvergenceReport {
    pub fn rate(&self, name: &str) -> Option<&RateFit> {
        self.rates.iter().find(|r| r.name == name)
    }

    /// Largest over smallest `‖u^ε‖_{L²(Ω₂^ε)} / ε²` across the sweep.
    pub fn porous_ratio_spread(&self) -> f64 {
        let r: Vec<f64> = self.records.iter().map(|r| r.porous_ratio()).collect();
        let hi = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = r.iter().copied().fold(f64::INFINITY, f64::min);
        hi / lo
    }
}

/// Rates of every measure over records sorted by decreasing `ε`.
pub fn fit_rates(records: &[ErrorRecord]) -> Vec<RateFit> {
    let Some(first) = records.first() else {
        return Vec::new();
    };
    let eps: Vec<f64> = records.iter().map(|r| r.eps).collect();
    first
        .measures()
        .iter()
        .enumerate()
        .map(|(k, (name, _))| {
            let vals: Vec<f64> = records.iter().map(|r| r.measures()[k].1).collect();
            let fit = loglog_fit(&eps, &vals);
            RateFit {
                name: name.to_string(),
                rate: fit.as_ref().map_or(f64::NAN, |f| f.slope),
                r2: fit.as_ref().map_or(f64::NAN, |f| f.r2),
                monotone: vals.windows(2).all(|w| w[1] < w[0]),
            }
        })
        .collect()
}

pub fn check_eps_list(spec: &CurveSpec, params: &MicroParams, eps_list: &[f64]) -> Result<()> {
    if eps_list.is_empty() {
        return Err(Error::Config("the ε list is empty".into()));
    }
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Config(format!("ε list must be strictly decreasing: {eps_list:?}")));
    }
    eps_list.iter().try_for_each(|&e| params.check_eps(spec, e))
}

/// Runs every scale of the sweep (concurrently) and fits rates. Fewer than
/// three scales give a report with the fits still computed where possible.
pub fn sweep_fit(
    spec: &CurveSpec,
    force: &BodyForce,
    inclusion: &InclusionSpec,
    coeffs: Arc<EffectiveCoefficients>,
    porous_mesh: Arc<PeriodicMesh>,
    eps_list: &[f64],
    params: &MicroParams,
) -> Result<ConvergenceReport> {
    check_eps_list(spec, params, eps_list)?;
    if eps_list.len() < 3 {
        warn!("rate fits over {} scales are not meaningful", eps_list.len());
    }
    let records = eps_list
        .par_iter()
        .map(|&eps| {
            compare_at(spec, force, inclusion, coeffs.clone(), porous_mesh.clone(), eps, params).map(|r| r.0)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConvergenceReport {
        eps_list: eps_list.to_vec(),
        rates: fit_rates(&records),
        records,
    })
}
