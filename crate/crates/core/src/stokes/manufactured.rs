//! Manufactured-solution convergence study for the transformed system.

use std::f64::consts::PI;
use std::sync::Arc;

use super::{Forcing, Metric, StokesSetup, StokesSystem};
use crate::error::{Error, Result};
use crate::fem::norms::integrate;
use crate::fem::Gauge;
use crate::fit::loglog_fit;
use crate::geometry::{build_box_mesh, BoundaryTag};
use crate::jet::Jet;
use crate::transform::identities::{grad, rot, mat_vec, Frame};
use crate::transform::CurveSpec;

/// Exact solution `u = F Curl s`, which satisfies `div(F⁻¹u) = 0`, and a
/// pressure with zero mean over every full period in `z₁`.
pub struct Manufactured {
    pub spec: CurveSpec,
}

impl Manufactured {
    fn k(&self) -> f64 {
        2.0 * PI / self.spec.period
    }

    fn stream(&self, z1: Jet, z2: Jet) -> Jet {
        let k = self.k();
        ((z1 * k).cos() + 0.5) * (z2 * 1.7 + 0.3).sin() + (z1 * k + z2 * 0.8).sin() * 0.3
    }

    fn frame(&self, z1: Jet) -> Frame {
        Frame::new(self.spec.derivative_jet(z1, 1))
    }

    fn velocity_jet(&self, z1: Jet, z2: Jet) -> [Jet; 2] {
        let fr = self.frame(z1);
        mat_vec(fr.f, rot(grad(self.stream(z1, z2))))
    }

    fn pressure_jet(&self, z1: Jet, z2: Jet) -> Jet {
        (z1 * self.k() + 0.2).cos() * (z2 * z2 + 1.0)
    }

    pub fn velocity(&self, z: [f64; 2]) -> [f64; 2] {
        let u = self.velocity_jet(Jet::var1(z[0]), Jet::var2(z[1]));
        [u[0].value(), u[1].value()]
    }

    pub fn pressure(&self, z: [f64; 2]) -> f64 {
        self.pressure_jet(Jet::var1(z[0]), Jet::var2(z[1])).value()
    }

    /// `f = -div(F⁻¹F⁻ᵀ∇u) + F⁻ᵀ∇p`.
    pub fn force(&self, z: [f64; 2]) -> [f64; 2] {
        let (z1, z2) = (Jet::var1(z[0]), Jet::var2(z[1]));
        let fr = self.frame(z1);
        let lap = fr.laplace_v(self.velocity_jet(z1, z2));
        let gp = fr.grad(self.pressure_jet(z1, z2));
        [(gp[0] - lap[0]).value(), (gp[1] - lap[1]).value()]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceLevel {
    pub h: f64,
    pub unknowns: usize,
    pub velocity_l2: f64,
    pub pressure_l2: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceTable {
    pub levels: Vec<ConvergenceLevel>,
    /// Least-squares slopes of log error against log h; `None` for a
    /// single level.
    pub velocity_rate: Option<f64>,
    pub pressure_rate: Option<f64>,
}

/// Solves the manufactured problem on `(0,L)×(0,1)` (periodic in `z₁`,
/// Dirichlet data on top and bottom) on `levels` uniformly refined meshes,
/// starting from 4 cells per unit length.
pub fn manufactured_convergence(spec: &CurveSpec, levels: usize) -> Result<ConvergenceTable> {
    spec.validate()?;
    if levels == 0 {
        return Err(Error::Config("at least one refinement level is required".into()));
    }
    let exact = Manufactured { spec: spec.clone() };
    let force = |z: [f64; 2]| exact.force(z);
    let bc = |z: [f64; 2]| exact.velocity(z);
    let mut out = Vec::new();
    for lvl in 0..levels {
        let n = 4usize << lvl;
        let nx = ((spec.period * n as f64).round() as usize).max(1);
        let mesh = Arc::new(build_box_mesh(
            spec.period,
            0.0,
            1.0,
            nx,
            n,
            BoundaryTag::Bottom,
            BoundaryTag::Top,
        )?);
        let sys = StokesSystem::assemble(
            mesh.clone(),
            Metric::Curve(spec.clone()),
            StokesSetup {
                dirichlet: vec![BoundaryTag::Bottom, BoundaryTag::Top],
                gauge: Gauge::ZeroMean,
            },
        )?;
        let field = sys.solve(&Forcing {
            body: Some(&force),
            boundary: Some(&bc),
            interface: None,
        })?;
        let eu = integrate(&mesh, |t, _, l, x| {
            let a = field.velocity_at(t, l);
            let b = exact.velocity(x);
            (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
        })
        .sqrt();
        let ep = integrate(&mesh, |t, _, l, x| (field.pressure_at(t, l) - exact.pressure(x)).powi(2)).sqrt();
        out.push(ConvergenceLevel {
            h: 1.0 / n as f64,
            unknowns: sys.n_unknowns(),
            velocity_l2: eu,
            pressure_l2: ep,
        });
    }
    let hs: Vec<f64> = out.iter().map(|l| l.h).collect();
    let rate = |f: fn(&ConvergenceLevel) -> f64| {
        let e: Vec<f64> = out.iter().map(f).collect();
        loglog_fit(&hs, &e).map(|fit| fit.slope)
    };
    Ok(ConvergenceTable {
        velocity_rate: rate(|l| l.velocity_l2),
        pressure_rate: rate(|l| l.pressure_l2),
        levels: out,
    })
}
