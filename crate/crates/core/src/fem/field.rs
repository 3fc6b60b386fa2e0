//! Finite-element fields with evaluation.

use std::sync::Arc;

use super::element::{p2_grads, p2_values, TriGeom};
use super::locate::Locator;
use crate::geometry::PeriodicMesh;

/// How the pressure constant is fixed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gauge {
    /// `∫ p = 0` enforced by a Lagrange multiplier.
    ZeroMean,
    /// The first pressure unknown is set to zero.
    Pinned,
    /// No gauge; natural boundaries determine the constant.
    None,
}

/// Quadratic velocity at every P2 node and linear pressure at every vertex.
#[derive(Clone, Debug)]
pub struct MixedField {
    pub mesh: Arc<PeriodicMesh>,
    pub velocity: Vec<[f64; 2]>,
    pub pressure: Vec<f64>,
    pub gauge: Gauge,
    /// Relative residual of the linear solve that produced the field.
    pub residual: f64,
}

impl MixedField {
    pub fn zero(mesh: Arc<PeriodicMesh>, gauge: Gauge) -> Self {
        let velocity = vec![[0.0; 2]; mesh.n_p2_nodes()];
        let pressure = vec![0.0; mesh.n_vertices()];
        MixedField {
            mesh,
            velocity,
            pressure,
            gauge,
            residual: 0.0,
        }
    }

    pub fn velocity_at(&self, t: usize, l: [f64; 3]) -> [f64; 2] {
        let nodes = self.mesh.p2_nodes(t);
        let phi = p2_values(l);
        let mut u = [0.0; 2];
        for i in 0..6 {
            let v = self.velocity[nodes[i]];
            u[0] += phi[i] * v[0];
            u[1] += phi[i] * v[1];
        }
        u
    }

    /// `g[i][k] = ∂_i u_k`.
    pub fn velocity_grad_at(&self, t: usize, geom: &TriGeom, l: [f64; 3]) -> [[f64; 2]; 2] {
        let nodes = self.mesh.p2_nodes(t);
        let dphi = p2_grads(l, &geom.grad_lambda);
        let mut g = [[0.0; 2]; 2];
        for a in 0..6 {
            let v = self.velocity[nodes[a]];
            for i in 0..2 {
                for k in 0..2 {
                    g[i][k] += dphi[a][i] * v[k];
                }
            }
        }
        g
    }

    pub fn pressure_at(&self, t: usize, l: [f64; 3]) -> f64 {
        let [a, b, c] = self.mesh.triangles[t];
        l[0] * self.pressure[a] + l[1] * self.pressure[b] + l[2] * self.pressure[c]
    }

    /// Velocity and pressure at an arbitrary point, if it lies in the mesh.
    pub fn eval(&self, locator: &Locator, p: [f64; 2]) -> Option<([f64; 2], f64)> {
        let (t, l) = locator.locate(p)?;
        Some((self.velocity_at(t, l), self.pressure_at(t, l)))
    }

    /// `∫ p dx` (exact for linear pressure).
    pub fn pressure_integral(&self) -> f64 {
        let mesh = &self.mesh;
        (0..mesh.triangles.len())
            .map(|t| {
                let [a, b, c] = mesh.triangles[t];
                mesh.triangle_area(t) * (self.pressure[a] + self.pressure[b] + self.pressure[c]) / 3.0
            })
            .sum()
    }

    /// Shifts the pressure so that its mean over the mesh is zero.
    pub fn normalize_pressure(&mut self) {
        let mean = self.pressure_integral() / self.mesh.total_area();
        for p in &mut self.pressure {
            *p -= mean;
        }
        self.gauge = Gauge::ZeroMean;
    }

    /// Restriction to a submesh given the parent P2 node of each submesh node.
    pub fn restrict(&self, sub: Arc<PeriodicMesh>, p2map: &[usize]) -> MixedField {
        let velocity = p2map.iter().map(|&n| self.velocity[n]).collect();
        let nv = sub.n_vertices();
        let pressure = p2map[..nv].iter().map(|&n| self.pressure[n]).collect();
        MixedField {
            mesh: sub,
            velocity,
            pressure,
            gauge: self.gauge,
            residual: self.residual,
        }
    }

    /// Node-wise difference `self - other` on the same mesh.
    pub fn difference(&self, other: &MixedField) -> MixedField {
        assert_eq!(self.velocity.len(), other.velocity.len());
        assert_eq!(self.pressure.len(), other.pressure.len());
        let velocity = self
            .velocity
            .iter()
            .zip(&other.velocity)
            .map(|(a, b)| [a[0] - b[0], a[1] - b[1]])
            .collect();
        let pressure = self
            .pressure
            .iter()
            .zip(&other.pressure)
            .map(|(a, b)| a - b)
            .collect();
        MixedField {
            mesh: self.mesh.clone(),
            velocity,
            pressure,
            gauge: self.gauge,
            residual: self.residual.max(other.residual),
        }
    }

    pub fn scaled(&self, s: f64) -> MixedField {
        let mut out = self.clone();
        for v in &mut out.velocity {
            v[0] *= s;
            v[1] *= s;
        }
        for p in &mut out.pressure {
            *p *= s;
        }
        out
    }

    pub fn max_velocity(&self) -> f64 {
        self.velocity
            .iter()
            .fold(0.0, |m, v| m.max(v[0].abs()).max(v[1].abs()))
    }
}

/// Continuous piecewise-quadratic scalar field.
#[derive(Clone, Debug)]
pub struct ScalarField {
    pub mesh: Arc<PeriodicMesh>,
    pub values: Vec<f64>,
}

impl ScalarField {
    pub fn value_at(&self, t: usize, l: [f64; 3]) -> f64 {
        let nodes = self.mesh.p2_nodes(t);
        let phi = p2_values(l);
        (0..6).map(|i| phi[i] * self.values[nodes[i]]).sum()
    }

    pub fn grad_at(&self, t: usize, geom: &TriGeom, l: [f64; 3]) -> [f64; 2] {
        let nodes = self.mesh.p2_nodes(t);
        let dphi = p2_grads(l, &geom.grad_lambda);
        let mut g = [0.0; 2];
        for i in 0..6 {
            g[0] += dphi[i][0] * self.values[nodes[i]];
            g[1] += dphi[i][1] * self.values[nodes[i]];
        }
        g
    }
}
