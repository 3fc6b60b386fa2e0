//! The macroscopic model: no-slip free flow `u⁰`, the interface stress
//! jump, the free flow with slip `−εC^bl` on `Σ`, the effective Darcy
//! pressure below `Σ`, and the effective mass flow.

pub mod darcy;
pub mod recovery;


use std::sync::Arc;

use crate::boundary_layer::{decay_constants, BoundaryLayerSolution};
use crate::cell::PermeabilitySample;
use crate::error::{Error, Result};
use crate::fem::quadrature::gauss_legendre;
use crate::fem::{norms, Gauge, Locator, MixedField, ScalarField};
use crate::force::BodyForce;
use crate::geometry::{build_box_mesh, BoundaryTag, PeriodicMesh};
use crate::interp::PeriodicSpline;
use crate::stokes::{Forcing, Metric, StokesSetup, StokesSystem};
use crate::transform::CurveSpec;

pub use darcy::{darcy_velocity, solve_darcy, DarcySolution};
pub use recovery::stress_jump;

/// Relative size of `∫_Σ C^bl·F⁻ᵀe₂` tolerated before the slip data is
/// rejected as incompatible with incompressibility.
pub const COMPATIBILITY_TOLERANCE: f64 = 1e-6;

/// Interface and permeability coefficients sampled on a uniform grid of
/// `[0, L)` and interpolated by periodic cubic splines.
///
/// `C^bl` is interpolated through its tangential part `C·Fe₁` and its
/// normal part `C·F⁻ᵀe₂`, so that a vanishing normal part stays exactly
/// zero between the samples.
#[derive(Clone, Debug)]
pub struct EffectiveCoefficients {
    pub spec: CurveSpec,
    pub x1: Vec<f64>,
    pub a: Vec<[[f64; 2]; 2]>,
    pub cbl: Vec<[f64; 2]>,
    pub cbl_omega: Vec<f64>,
    tangential: PeriodicSpline,
    normal: PeriodicSpline,
    omega: PeriodicSpline,
    a_splines: [PeriodicSpline; 4],
}

fn check_grid(spec: &CurveSpec, x1: &[f64]) -> Result<()> {
    let n = x1.len();
    for (k, &x) in x1.iter().enumerate() {
        let want = spec.period * k as f64 / n as f64;
        if (x - want).abs() > 1e-9 * spec.period {
            return Err(Error::Config(format!(
                "coefficient grid must be uniform on [0, L): sample {k} is at {x}, expected {want}"
            )));
        }
    }
    Ok(())
}

impl EffectiveCoefficients {
    pub fn new(
        spec: CurveSpec,
        x1: Vec<f64>,
        a: Vec<[[f64; 2]; 2]>,
        cbl: Vec<[f64; 2]>,
        cbl_omega: Vec<f64>,
    ) -> Result<Self> {
        let n = x1.len();
        if a.len() != n || cbl.len() != n || cbl_omega.len() != n {
            return Err(Error::Config(format!(
                "coefficient samples disagree in length: {} abscissae, {} A, {} C, {} C_omega",
                n,
                a.len(),
                cbl.len(),
                cbl_omega.len()
            )));
        }
        check_grid(&spec, &x1)?;
        let period = spec.period;
        let (mut tan, mut nor) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for (x, c) in x1.iter().zip(&cbl) {
            let gp = spec.gprime(*x);
            tan.push(c[0] + gp * c[1]);
            nor.push(c[1] - gp * c[0]);
        }
        let entry = |i: usize, j: usize| PeriodicSpline::new(period, a.iter().map(|m| m[i][j]).collect());
        let a_splines = [entry(0, 0)?, entry(0, 1)?, entry(1, 0)?, entry(1, 1)?];
        Ok(EffectiveCoefficients {
            tangential: PeriodicSpline::new(period, tan)?,
            normal: PeriodicSpline::new(period, nor)?,
            omega: PeriodicSpline::new(period, cbl_omega.clone())?,
            a_splines,
            spec,
            x1,
            a,
            cbl,
            cbl_omega,
        })
    }

    /// Coefficients from the cell and boundary-layer stages, which must be
    /// sampled at the same abscissae.
    pub fn from_stages(
        spec: &CurveSpec,
        perm: &[PermeabilitySample],
        layers: &[BoundaryLayerSolution],
    ) -> Result<Self> {
        if perm.len() != layers.len() {
            return Err(Error::Config(format!(
                "{} permeability samples but {} boundary layers",
                perm.len(),
                layers.len()
            )));
        }
        let mut x1 = Vec::new();
        let mut cbl = Vec::new();
        let mut omega = Vec::new();
        for (p, b) in perm.iter().zip(layers) {
            if (p.x1 - b.x1).abs() > 1e-12 * spec.period {
                return Err(Error::Config(format!(
                    "cell sample at x1 = {} paired with boundary layer at x1 = {}",
                    p.x1, b.x1
                )));
            }
            let (c, w) = decay_constants(b)?;
            x1.push(p.x1);
            cbl.push(c);
            omega.push(w);
        }
        let a = perm.iter().map(|p| p.a).collect();
        Self::new(spec.clone(), x1, a, cbl, omega)
    }

    /// The same permeability without interface corrections.
    pub fn without_slip(&self) -> Result<Self> {
        let n = self.x1.len();
        Self::new(self.spec.clone(), self.x1.clone(), self.a.clone(), vec![[0.0; 2]; n], vec![0.0; n])
    }

    pub fn cbl_at(&self, x1: f64) -> [f64; 2] {
        let gp = self.spec.gprime(x1);
        let (t, n) = (self.tangential.eval(x1), self.normal.eval(x1));
        let d = 1.0 + gp * gp;
        [(t - gp * n) / d, (gp * t + n) / d]
    }

    /// `C^bl·Fe₁`.
    pub fn tangential_at(&self, x1: f64) -> f64 {
        self.tangential.eval(x1)
    }

    pub fn cbl_omega_at(&self, x1: f64) -> f64 {
        self.omega.eval(x1)
    }

    pub fn a_at(&self, x1: f64) -> [[f64; 2]; 2] {
        let s = &self.a_splines;
        [[s[0].eval(x1), s[1].eval(x1)], [s[2].eval(x1), s[3].eval(x1)]]
    }

    /// `(∫_Σ C^bl·F⁻ᵀe₂ dx₁, mean |C^bl|)`.
    pub fn compatibility(&self) -> (f64, f64) {
        let n = self.x1.len();
        let h = self.spec.period / n as f64;
        let (xs, ws) = gauss_legendre(6);
        let (mut flux, mut size) = (0.0, 0.0);
        for k in 0..n {
            for (s, w) in xs.iter().zip(&ws) {
                let x = h * (k as f64 + s);
                let c = self.cbl_at(x);
                flux += w * h * self.normal.eval(x);
                size += w * h * c[0].hypot(c[1]);
            }
        }
        (flux, size / self.spec.period)
    }

    pub fn check_compatibility(&self) -> Result<()> {
        let (flux, mean) = self.compatibility();
        if flux.abs() > COMPATIBILITY_TOLERANCE * mean * self.spec.period + 1e-14 {
            return Err(Error::Data(format!(
                "slip data carries net flux {flux:.3e} through the interface \
                 (mean |C^bl| = {mean:.3e}); the free-fluid problem has no solution"
            )));
        }
        Ok(())
    }
}

/// Meshes of the free part `(0,L) × (0,height)` and the porous part
/// `(0,L) × (−depth, 0)` with about `h`-sized cells.
pub fn macro_meshes(
    spec: &CurveSpec,
    height: f64,
    depth: f64,
    h: f64,
) -> Result<(Arc<PeriodicMesh>, Arc<PeriodicMesh>)> {
    if !(h > 0.0 && height > 0.0 && depth > 0.0) {
        return Err(Error::Config(format!(
            "macro meshes need positive height, depth and size, got {height}, {depth}, {h}"
        )));
    }
    let cells = |len: f64| ((len / h).round() as usize).max(2);
    let nx = cells(spec.period);
    let free = build_box_mesh(spec.period, 0.0, height, nx, cells(height), BoundaryTag::Interface, BoundaryTag::Top)?;
    let porous = build_box_mesh(spec.period, -depth, 0.0, nx, cells(depth), BoundaryTag::Bottom, BoundaryTag::Interface)?;
    Ok((Arc::new(free), Arc::new(porous)))
}

/// Transformed Stokes operator on the free part with Dirichlet data on `Σ`
/// and the top wall, factorized once for `u⁰` and every `u^eff`. The
/// pressure is pinned at one vertex for the solve and shifted to zero mean
/// afterwards; a mean-value multiplier row would be dense and ruin the
/// sparsity of the factors.
pub struct FreeFlow {
    pub spec: CurveSpec,
    system: StokesSystem,
}

impl FreeFlow {
    pub fn new(spec: &CurveSpec, mesh: Arc<PeriodicMesh>) -> Result<Self> {
        let setup = StokesSetup {
            dirichlet: vec![BoundaryTag::Interface, BoundaryTag::Top],
            gauge: Gauge::Pinned,
        };
        let system = StokesSystem::assemble(mesh, Metric::Curve(spec.clone()), setup)?;
        Ok(FreeFlow {
            spec: spec.clone(),
            system,
        })
    }

    pub fn mesh(&self) -> &Arc<PeriodicMesh> {
        &self.system.mesh
    }

    pub fn solve_u0(&self, force: &BodyForce) -> Result<MixedField> {
        force.validate()?;
        let period = self.spec.period;
        let body = move |x: [f64; 2]| force.eval(x, period);
        let mut u = self.system.solve(&Forcing {
            body: Some(&body),
            ..Forcing::default()
        })?;
        u.normalize_pressure();
        Ok(u)
    }

    pub fn solve_slip(&self, force: &BodyForce, coeffs: &EffectiveCoefficients, eps: f64) -> Result<MixedField> {
        force.validate()?;
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(Error::Config(format!("scale must be non-negative, got {eps}")));
        }
        coeffs.check_compatibility()?;
        let period = self.spec.period;
        let tol = 1e-10 * self.system.mesh.cell_size.max(1.0);
        let body = move |x: [f64; 2]| force.eval(x, period);
        let slip = move |x: [f64; 2]| {
            if x[1].abs() < tol {
                let c = coeffs.cbl_at(x[0]);
                [-eps * c[0], -eps * c[1]]
            } else {
                [0.0, 0.0]
            }
        };
        let mut u = self.system.solve(&Forcing {
            body: Some(&body),
            boundary: Some(&slip),
            ..Forcing::default()
        })?;
        u.normalize_pressure();
        Ok(u)
    }
}

pub fn solve_u0(spec: &CurveSpec, force: &BodyForce, mesh: Arc<PeriodicMesh>) -> Result<MixedField> {
    FreeFlow::new(spec, mesh)?.solve_u0(force)
}

pub fn solve_effective_fluid(
    spec: &CurveSpec,
    force: &BodyForce,
    coeffs: &EffectiveCoefficients,
    eps: f64,
    mesh: Arc<PeriodicMesh>,
) -> Result<MixedField> {
    FreeFlow::new(spec, mesh)?.solve_slip(force, coeffs, eps)
}

/// Tangential velocity `u·Fe₁` at one interface node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlipSample {
    pub x1: f64,
    pub slip: f64,
}

/// `u·Fe₁` at the quadratic nodes on `Σ` (sorted by `x₁`, one per periodic
/// class) and the mass flow `∫ u·Fe₁` over the free part.
pub fn slip_and_massflow(u: &MixedField, spec: &CurveSpec) -> (Vec<SlipSample>, f64) {
    let mesh = &u.mesh;
    let tol = 1e-10 * mesh.cell_size.max(1.0);
    let mut slip: Vec<SlipSample> = (0..mesh.n_p2_nodes())
        .filter_map(|n| {
            let p = mesh.p2_point(n);
            if p[1].abs() > tol || p[0] > spec.period - tol {
                return None;
            }
            let v = u.velocity[n];
            Some(SlipSample {
                x1: p[0],
                slip: v[0] + spec.gprime(p[0]) * v[1],
            })
        })
        .collect();
    slip.sort_by(|a, b| a.x1.total_cmp(&b.x1));
    (slip, mass_flow(u, spec))
}

/// `∫ u·Fe₁ dx = ∫ (u₁ + g′u₂) dx`.
pub fn mass_flow(u: &MixedField, spec: &CurveSpec) -> f64 {
    norms::integrate(&u.mesh, |t, _, l, x| {
        let v = u.velocity_at(t, l);
        v[0] + spec.gprime(x[0]) * v[1]
    })
}

/// `p(x₁, 0⁺)` of a free-flow field.
pub fn interface_pressure(u: &MixedField, locator: &Locator, x1: f64) -> f64 {
    locator
        .locate([x1, 0.0])
        .map_or(0.0, |(t, l)| u.pressure_at(t, l))
}

/// The full macroscopic solution for one scale `ε`.
#[derive(Clone, Debug)]
pub struct EffectiveSolution {
    pub u0_pi0: MixedField,
    pub ueff_peff: MixedField,
    pub darcy_p: ScalarField,
    pub darcy: DarcySolution,
    pub coeffs: Arc<EffectiveCoefficients>,
    pub eps: f64,
    pub m_eff: f64,
    pub slip: Vec<SlipSample>,
}

impl EffectiveSolution {
    /// Largest deviation of the slip from `−εC^bl·Fe₁` over the interface
    /// nodes.
    pub fn slip_defect(&self) -> f64 {
        self.slip
            .iter()
            .map(|s| (s.slip + self.eps * self.coeffs.tangential_at(s.x1)).abs())
            .fold(0.0, f64::max)
    }
}

/// Darcy pressure whose trace on `Σ` is `p(x₁, 0⁺) + C^bl_ω(x₁)` for the
/// pressure of the given free-flow field.
pub fn darcy_below(
    spec: &CurveSpec,
    force: &BodyForce,
    coeffs: &EffectiveCoefficients,
    free: &MixedField,
    porous: Arc<PeriodicMesh>,
) -> Result<DarcySolution> {
    force.validate()?;
    let locator = Locator::new(&free.mesh);
    let trace = |x1: f64| interface_pressure(free, &locator, x1) + coeffs.cbl_omega_at(x1);
    let body = |x: [f64; 2]| force.eval(x, spec.period);
    solve_darcy(spec, &body, coeffs, &trace, porous)
}

/// Slip flow, Darcy pressure and mass flow for one `ε`, given `u⁰` on the
/// same free-part mesh.
pub fn solve_effective(
    flow: &FreeFlow,
    u0: &MixedField,
    force: &BodyForce,
    coeffs: Arc<EffectiveCoefficients>,
    eps: f64,
    porous: Arc<PeriodicMesh>,
) -> Result<EffectiveSolution> {
    let spec = &flow.spec;
    let ueff = flow.solve_slip(force, &coeffs, eps)?;
    let darcy = darcy_below(spec, force, &coeffs, &ueff, porous)?;
    let (slip, m_eff) = slip_and_massflow(&ueff, spec);
    Ok(EffectiveSolution {
        u0_pi0: u0.clone(),
        ueff_peff: ueff,
        darcy_p: darcy.pressure.clone(),
        darcy,
        coeffs,
        eps,
        m_eff,
        slip,
    })
}
