use std::sync::Arc;

use log::warn;
use nalgebra::SymmetricEigen;

use crate::boundary_layer::{boundary_layers, decay_constants};
use crate::cell::{permeability, uniform_grid};
use crate::dns::sweep_fit;
use crate::effective::{
    darcy::max_darcy_speed, darcy_below, macro_meshes, mass_flow, recovery::stress_jump, slip_and_massflow,
    EffectiveCoefficients, FreeFlow,
};
use crate::error::{Error, Result};
use crate::fem::MixedField;
use crate::geometry::PeriodicMesh;
use crate::transform::{jacobian, metric_eigenvalues, verify_identities, CurveSpec, DEFAULT_RESOLUTION};

use super::{Stage, Table, Workbench};

/// Samples of the metric checks along one period.
const JACOBIAN_SAMPLES: usize = 64;

/// Nodal values `x, y, u1, u2, p` at every quadratic node; the linear
/// pressure is averaged onto edge midpoints.
fn push_field(t: &mut Table, prefix: &[f64], u: &MixedField) {
    let mesh = &u.mesh;
    let nv = mesh.n_vertices();
    for n in 0..mesh.n_p2_nodes() {
        let x = mesh.p2_point(n);
        let p = if n < nv {
            u.pressure[n]
        } else {
            let [a, b] = mesh.edges[n - nv];
            0.5 * (u.pressure[a] + u.pressure[b])
        };
        let v = u.velocity[n];
        let mut row = prefix.to_vec();
        row.extend([x[0], x[1], v[0], v[1], p]);
        t.push(row);
    }
}

fn free_mesh(wb: &Workbench) -> Result<(Arc<PeriodicMesh>, Arc<PeriodicMesh>)> {
    let c = &wb.config;
    macro_meshes(
        &c.curve_spec(),
        c.domain.h_free,
        c.domain.k_depth,
        c.discretization.h_macro,
    )
}

impl Workbench {
    fn spec(&self) -> CurveSpec {
        self.config.curve_spec()
    }

    fn grid(&self) -> Vec<f64> {
        uniform_grid(self.config.domain.length, self.config.sampling.x1_points)
    }

    pub(super) fn transform_stage(&self) -> Result<()> {
        let spec = self.spec();
        let tol = self.config.tolerances.identities;
        let report = verify_identities(&spec, DEFAULT_RESOLUTION)?;
        let mut ids = Table::labeled("identity", &["residual", "tolerance", "pass"]);
        for e in &report.entries {
            let pass = if e.max_residual < tol { 1.0 } else { 0.0 };
            ids.push_labeled(e.name, vec![e.max_residual, tol, pass]);
        }
        ids.write(&self.path("transform/identities.csv"))?;

        let mut jac = Table::new(&[
            "x1",
            "gprime",
            "detF_minus_1",
            "eig_lo",
            "eig_hi",
            "eig_lo_closed",
            "eig_hi_closed",
            "eig_product",
        ]);
        for x1 in uniform_grid(spec.period, JACOBIAN_SAMPLES) {
            let j = jacobian(&spec, x1);
            let mut ev: Vec<f64> = SymmetricEigen::new(j.metric).eigenvalues.iter().copied().collect();
            ev.sort_by(f64::total_cmp);
            let (lo, hi) = metric_eigenvalues(j.gprime);
            jac.push(vec![x1, j.gprime, j.det_f() - 1.0, ev[0], ev[1], lo, hi, lo * hi]);
        }
        jac.write(&self.path("transform/jacobian.csv"))?;

        if report.max_residual() >= tol {
            return Err(Error::NumericalQuality(format!(
                "transform identity residual {:.3e} exceeds {tol:.1e}",
                report.max_residual()
            )));
        }
        Ok(())
    }

    pub(super) fn cell_stage(&self) -> Result<()> {
        let c = &self.config;
        let perm = permeability(&self.spec(), &self.grid(), &c.inclusion, c.discretization.h_cell)?;
        let mut t = Table::new(&["x1", "gprime", "A11", "A12", "A21", "A22", "eig_lo", "eig_hi"]);
        for s in &perm {
            t.push(vec![
                s.x1, s.gprime, s.a[0][0], s.a[0][1], s.a[1][0], s.a[1][1], s.eig_lo, s.eig_hi,
            ]);
        }
        t.write(&self.path("cell/permeability.csv"))
    }

    pub(super) fn free_flow_stage(&self) -> Result<()> {
        let spec = self.spec();
        let (free, _) = free_mesh(self)?;
        let flow = FreeFlow::new(&spec, free)?;
        let u0 = flow.solve_u0(&self.config.force)?;
        let grid = self.grid();
        let k = stress_jump(&u0, &spec, &grid);
        let mut t = Table::new(&["x1", "gprime", "K1", "K2"]);
        for (x1, k) in grid.iter().zip(&k) {
            t.push(vec![*x1, spec.gprime(*x1), k[0], k[1]]);
        }
        t.write(&self.path("free_flow/stress_jump.csv"))?;
        let mut s = Table::new(&["M0", "max_velocity", "solver_residual"]);
        s.push(vec![mass_flow(&u0, &spec), u0.max_velocity(), u0.residual]);
        s.write(&self.path("free_flow/summary.csv"))?;
        let mut f = Table::new(&["x", "y", "u1", "u2", "p"]);
        push_field(&mut f, &[], &u0);
        f.write(&self.path("free_flow/u0_field.csv"))
    }

    pub(super) fn boundary_layer_stage(&self) -> Result<()> {
        let spec = self.spec();
        let k = self.read(Stage::FreeFlow, "free_flow/stress_jump.csv")?;
        let (x1, k1, k2) = (k.get("x1")?, k.get("K1")?, k.get("K2")?);
        let samples: Vec<(f64, [f64; 2])> = (0..x1.len()).map(|i| (x1[i], [k1[i], k2[i]])).collect();
        let strip = self.config.strip_spec();
        let mesh = Arc::new(strip.build(&self.config.inclusion)?);
        let deep = Arc::new(strip.deepened().build(&self.config.inclusion)?);
        let layers = boundary_layers(&spec, &samples, mesh, Some(deep))?;

        let mut cbl = Table::new(&[
            "x1",
            "gprime",
            "Cbl1",
            "Cbl2",
            "Cbl_omega",
            "decay_rate",
            "R2",
            "truncation_delta",
        ]);
        let mut checks = Table::new(&[
            "x1",
            "normal_residual",
            "max_flux_variational",
            "max_flux_line",
            "omega_far_lower",
            "omega_far_upper",
            "kappa_inf",
        ]);
        let mut decay = Table::new(&["x1", "depth", "grad_norm"]);
        for s in &layers {
            cbl.push(vec![
                s.x1,
                s.gprime,
                s.cbl[0],
                s.cbl[1],
                s.cbl_omega,
                s.decay.rate,
                s.decay.r2,
                s.truncation_delta.unwrap_or(f64::NAN),
            ]);
            let fv = s.fluxes.iter().map(|f| f.variational.abs()).fold(0.0, f64::max);
            let fl = s.fluxes.iter().map(|f| f.line.abs()).fold(0.0, f64::max);
            checks.push(vec![
                s.x1,
                s.normal_residual,
                fv,
                fl,
                s.far_field.omega[0],
                s.far_field.omega[1],
                s.kappa_inf,
            ]);
            // Layer centres: pore layers below the interface, free layers above.
            for (k, n) in s.pore_layer_norms.iter().enumerate() {
                decay.push(vec![s.x1, -(k as f64) - 0.5, *n]);
            }
            for (j, n) in s.free_layer_norms.iter().enumerate() {
                decay.push(vec![s.x1, j as f64 + 0.5, *n]);
            }
        }
        decay.rows.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
        cbl.write(&self.path("boundary_layer/cbl.csv"))?;
        checks.write(&self.path("boundary_layer/checks.csv"))?;
        decay.write(&self.path("boundary_layer/decay.csv"))?;

        let tol = self.config.tolerances.truncation;
        for s in &layers {
            decay_constants(s)?;
            if let Some(d) = s.truncation_delta {
                if d >= tol {
                    warn!(
                        "x1 = {:.4}: C^bl changes by {d:.2e} when the strip is deepened (tolerance {tol:.0e})",
                        s.x1
                    );
                }
            }
        }
        Ok(())
    }

    /// Interpolated coefficients from the cell and boundary-layer outputs.
    pub fn coefficients(&self) -> Result<EffectiveCoefficients> {
        let p = self.read(Stage::Cell, "cell/permeability.csv")?;
        let b = self.read(Stage::BoundaryLayer, "boundary_layer/cbl.csv")?;
        let x1 = p.get("x1")?;
        let xb = b.get("x1")?;
        if x1 != xb {
            return Err(Error::Data(format!(
                "cell samples at {x1:?} but boundary layers at {xb:?}; rerun both stages"
            )));
        }
        let (a11, a12, a21, a22) = (p.get("A11")?, p.get("A12")?, p.get("A21")?, p.get("A22")?);
        let a = (0..x1.len()).map(|i| [[a11[i], a12[i]], [a21[i], a22[i]]]).collect();
        let (c1, c2) = (b.get("Cbl1")?, b.get("Cbl2")?);
        let cbl = c1.iter().zip(&c2).map(|(a, b)| [*a, *b]).collect();
        EffectiveCoefficients::new(self.spec(), x1, a, cbl, b.get("Cbl_omega")?)
    }

    pub(super) fn effective_stage(&self) -> Result<()> {
        let spec = self.spec();
        let c = &self.config;
        let coeffs = self.coefficients()?;
        let mut ct = Table::new(&[
            "x1",
            "gprime",
            "A11",
            "A12",
            "A21",
            "A22",
            "Cbl_tangential",
            "Cbl_normal",
            "Cbl_omega",
        ]);
        for (i, &x) in coeffs.x1.iter().enumerate() {
            let gp = spec.gprime(x);
            let (a, cb) = (coeffs.a[i], coeffs.cbl[i]);
            ct.push(vec![
                x,
                gp,
                a[0][0],
                a[0][1],
                a[1][0],
                a[1][1],
                cb[0] + gp * cb[1],
                cb[1] - gp * cb[0],
                coeffs.cbl_omega[i],
            ]);
        }
        ct.write(&self.path("effective/coefficients.csv"))?;

        let (flux, scale) = coeffs.compatibility();
        let (free, _) = free_mesh(self)?;
        let flow = FreeFlow::new(&spec, free)?;
        let m0 = mass_flow(&flow.solve_u0(&c.force)?, &spec);
        let mut slip = Table::new(&["eps", "x1", "slip_tangential", "expected", "defect"]);
        let mut summary = Table::new(&[
            "eps",
            "M_eff",
            "M0",
            "max_slip_defect",
            "compatibility_flux",
            "mean_abs_Cbl",
        ]);
        let mut field = Table::new(&["eps", "x", "y", "u1", "u2", "p"]);
        let mut worst: f64 = 0.0;
        for &eps in &c.sweep.eps_list {
            let u = flow.solve_slip(&c.force, &coeffs, eps)?;
            let (samples, m) = slip_and_massflow(&u, &spec);
            let mut defect: f64 = 0.0;
            for s in &samples {
                let want = -eps * coeffs.tangential_at(s.x1);
                let d = (s.slip - want).abs();
                defect = defect.max(d);
                slip.push(vec![eps, s.x1, s.slip, want, d]);
            }
            worst = worst.max(defect);
            summary.push(vec![eps, m, m0, defect, flux, scale]);
            push_field(&mut field, &[eps], &u);
        }
        slip.write(&self.path("effective/slip.csv"))?;
        summary.write(&self.path("effective/summary.csv"))?;
        field.write(&self.path("effective/ueff_field.csv"))?;
        if worst >= c.tolerances.slip {
            return Err(Error::NumericalQuality(format!(
                "slip trace misses −εC^bl·Fe₁ by {worst:.3e} (tolerance {:.0e})",
                c.tolerances.slip
            )));
        }
        Ok(())
    }

    pub(super) fn darcy_stage(&self) -> Result<()> {
        let spec = self.spec();
        let c = &self.config;
        // The slip flows are recomputed rather than read back: they are
        // cheap, and the stored field export is not a finite-element field.
        if !self.path("effective/summary.csv").exists() {
            return Err(self.missing(Stage::Effective));
        }
        let coeffs = self.coefficients()?;
        let (free, porous) = free_mesh(self)?;
        let flow = FreeFlow::new(&spec, free)?;
        let body = |x: [f64; 2]| c.force.eval(x, spec.period);
        let mut flux = Table::new(&["eps", "sigma_flux", "sigma_line_flux", "solver_residual", "max_speed"]);
        let mut field = Table::new(&["eps", "x", "y", "p"]);
        for &eps in &c.sweep.eps_list {
            let u = flow.solve_slip(&c.force, &coeffs, eps)?;
            let d = darcy_below(&spec, &c.force, &coeffs, &u, porous.clone())?;
            let speed = max_darcy_speed(&spec, &body, &coeffs, &d.pressure);
            flux.push(vec![eps, d.sigma_flux, d.sigma_line_flux, d.residual, speed]);
            for n in 0..porous.n_p2_nodes() {
                let x = porous.p2_point(n);
                field.push(vec![eps, x[0], x[1], d.pressure.values[n]]);
            }
        }
        flux.write(&self.path("darcy/flux.csv"))?;
        field.write(&self.path("darcy/pressure_field.csv"))
    }

    pub(super) fn dns_stage(&self) -> Result<()> {
        let c = &self.config;
        let coeffs = Arc::new(self.coefficients()?);
        let (_, porous) = free_mesh(self)?;
        let report = sweep_fit(
            &self.spec(),
            &c.force,
            &c.inclusion,
            coeffs,
            porous,
            &c.sweep.eps_list,
            &c.micro_params(),
        )?;
        let names: Vec<&str> = report
            .records
            .first()
            .map(|r| r.measures().iter().map(|m| m.0).collect())
            .unwrap_or_default();
        let mut header = vec!["eps"];
        header.extend(&names);
        header.extend(["M_eps", "M_eff", "porous_ratio"]);
        let mut errors = Table::new(&header);
        for r in &report.records {
            let mut row = vec![r.eps];
            row.extend(r.measures().iter().map(|m| m.1));
            row.extend([r.m_eps, r.m_eff, r.porous_ratio()]);
            errors.push(row);
        }
        errors.write(&self.path("dns/errors.csv"))?;
        let mut rates = Table::labeled("measure", &["rate", "R2", "monotone"]);
        for f in &report.rates {
            rates.push_labeled(&f.name, vec![f.rate, f.r2, if f.monotone { 1.0 } else { 0.0 }]);
        }
        rates.push_labeled(
            "porous_ratio_spread",
            vec![report.porous_ratio_spread(), f64::NAN, f64::NAN],
        );
        rates.write(&self.path("dns/rates.csv"))
    }
}
