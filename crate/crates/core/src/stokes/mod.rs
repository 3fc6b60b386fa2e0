//! Taylor–Hood discretization of the transformed Stokes system
//!
//! ```text
//! -div(F⁻¹F⁻ᵀ∇u) + F⁻ᵀ∇p = f,   div(F⁻¹u) = 0
//! ```
//!
//! with viscosity one. Velocities are continuous quadratics, pressures
//! continuous linears; periodicity is imposed by identifying degrees of
//! freedom and Dirichlet data strongly. The weak form is
//! `a(u,v) + b(v,p) = (f,v) + ∫_S σ·v` and `b(u,q) = 0` with
//! `a(u,v) = Σ_k ∫ ∇u_k · F⁻¹F⁻ᵀ ∇v_k` and `b(v,q) = -∫ q div(F⁻¹v)`.
//! A viscosity `μ ≠ 1` would scale `a` only.

pub mod forms;
pub mod manufactured;

use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::fem::element::{p2_edge_values, p2_grads, p2_values, TriGeom};
use crate::fem::quadrature::{collapsed, degree4, gauss3, TriRule};
use crate::fem::{CscMatrix, DofMap, Factorization, Gauge, MixedField, PatternBuilder};
use crate::geometry::{BoundaryTag, EdgeLookup, PeriodicMesh};
use crate::transform::CurveSpec;

pub use manufactured::{manufactured_convergence, ConvergenceLevel, ConvergenceTable};

/// Source of the interface slope `g′` entering `F`.
#[derive(Clone, Debug, PartialEq)]
pub enum Metric {
    /// `g′` evaluated at the first coordinate of each quadrature point.
    Curve(CurveSpec),
    /// A constant slope (frozen macroscopic parameter in cell and
    /// boundary-layer problems).
    Frozen(f64),
}

impl Metric {
    pub fn identity() -> Self {
        Metric::Frozen(0.0)
    }

    /// Quadrature for the bilinear forms: the degree-4 rule is exact for a
    /// constant slope; a varying slope gets a high-order rule so that the
    /// divergence rows annihilate constant pressures to roundoff.
    pub fn rule(&self) -> TriRule {
        match self {
            Metric::Curve(spec) if !spec.is_flat() => collapsed(7),
            _ => degree4(),
        }
    }

    pub fn slope(&self, x1: f64) -> f64 {
        match self {
            Metric::Curve(spec) => spec.gprime(x1),
            Metric::Frozen(gp) => *gp,
        }
    }
}

/// Boundary conditions of one system.
#[derive(Clone, Debug, PartialEq)]
pub struct StokesSetup {
    pub dirichlet: Vec<BoundaryTag>,
    pub gauge: Gauge,
}

/// Right-hand-side data. All functions take flat (reference) coordinates.
#[derive(Default, Clone, Copy)]
pub struct Forcing<'a> {
    pub body: Option<&'a (dyn Fn([f64; 2]) -> [f64; 2] + Sync)>,
    /// Dirichlet values; homogeneous when absent.
    pub boundary: Option<&'a (dyn Fn([f64; 2]) -> [f64; 2] + Sync)>,
    /// Surface source `σ(x₁)` integrated against test functions on edges
    /// tagged `Interface`.
    pub interface: Option<&'a (dyn Fn(f64) -> [f64; 2] + Sync)>,
}

/// Element matrices: `k` is the velocity block shared by both components,
/// `b1`, `b2` the divergence rows for each velocity component.
pub(crate) struct Local {
    pub k: [[f64; 6]; 6],
    pub b1: [[f64; 6]; 3],
    pub b2: [[f64; 6]; 3],
}

pub(crate) fn local_matrices(geom: &TriGeom, metric: &Metric, rule: &TriRule) -> Local {
    let mut k = [[0.0; 6]; 6];
    let mut b1 = [[0.0; 6]; 3];
    let mut b2 = [[0.0; 6]; 3];
    for (l, w) in rule.points.iter().zip(&rule.weights) {
        let w = w * geom.area;
        let gp = metric.slope(geom.point(*l)[0]);
        let m = [[1.0, -gp], [-gp, 1.0 + gp * gp]];
        let d = p2_grads(*l, &geom.grad_lambda);
        for i in 0..6 {
            let md = [
                m[0][0] * d[i][0] + m[0][1] * d[i][1],
                m[1][0] * d[i][0] + m[1][1] * d[i][1],
            ];
            for j in 0..6 {
                k[i][j] += w * (md[0] * d[j][0] + md[1] * d[j][1]);
            }
        }
        for q in 0..3 {
            let psi = l[q];
            for j in 0..6 {
                b1[q][j] -= w * psi * (d[j][0] - gp * d[j][1]);
                b2[q][j] -= w * psi * d[j][1];
            }
        }
    }
    Local { k, b1, b2 }
}

/// An assembled transformed Stokes system ready for repeated solves.
pub struct StokesSystem {
    pub mesh: Arc<PeriodicMesh>,
    pub metric: Metric,
    pub setup: StokesSetup,
    pub vdofs: DofMap,
    pub pdofs: DofMap,
    pub matrix: CscMatrix,
    factorization: OnceLock<Factorization>,
}

impl StokesSystem {
    /// Assembles the saddle-point matrix after checking that the boundary
    /// conditions leave no kernel.
    pub fn assemble(mesh: Arc<PeriodicMesh>, metric: Metric, setup: StokesSetup) -> Result<Self> {
        let vdofs = DofMap::quadratic(&mesh, &setup.dirichlet);
        let pdofs = DofMap::linear(&mesh);
        check_kernel(&mesh, &setup, &vdofs)?;
        let nu = vdofs.n_free;
        let np = pdofs.n_free;
        let n = 2 * nu + np + usize::from(setup.gauge != Gauge::None);
        let mut pb = PatternBuilder::new(n);
        for t in 0..mesh.triangles.len() {
            let (v1, v2, p) = local_indices(&mesh, &vdofs, &pdofs, t);
            pb.add_block(&v1, &v1);
            pb.add_block(&v2, &v2);
            pb.add_block(&p, &v1);
            pb.add_block(&p, &v2);
            pb.add_block(&v1, &p);
            pb.add_block(&v2, &p);
        }
        let weights = gauge_weights(&mesh, &pdofs, setup.gauge);
        if setup.gauge != Gauge::None {
            let lam = n - 1;
            for (j, _) in weights.iter().enumerate().filter(|(_, w)| **w != 0.0) {
                pb.add_entry(lam, 2 * nu + j);
                pb.add_entry(2 * nu + j, lam);
            }
        }
        let mut matrix = pb.build();
        let rule = metric.rule();
        for t in 0..mesh.triangles.len() {
            let geom = TriGeom::new(&mesh, t);
            let loc = local_matrices(&geom, &metric, &rule);
            let (v1, v2, p) = local_indices(&mesh, &vdofs, &pdofs, t);
            for i in 0..6 {
                for j in 0..6 {
                    if let (Some(r), Some(c)) = (v1[i], v1[j]) {
                        matrix.add(r, c, loc.k[i][j]);
                    }
                    if let (Some(r), Some(c)) = (v2[i], v2[j]) {
                        matrix.add(r, c, loc.k[i][j]);
                    }
                }
            }
            for q in 0..3 {
                let Some(pq) = p[q] else { continue };
                for j in 0..6 {
                    if let Some(c) = v1[j] {
                        matrix.add(pq, c, loc.b1[q][j]);
                        matrix.add(c, pq, loc.b1[q][j]);
                    }
                    if let Some(c) = v2[j] {
                        matrix.add(pq, c, loc.b2[q][j]);
                        matrix.add(c, pq, loc.b2[q][j]);
                    }
                }
            }
        }
        if setup.gauge != Gauge::None {
            let lam = n - 1;
            for (j, &w) in weights.iter().enumerate().filter(|(_, w)| **w != 0.0) {
                matrix.add(lam, 2 * nu + j, w);
                matrix.add(2 * nu + j, lam, w);
            }
        }
        Ok(StokesSystem {
            mesh,
            metric,
            setup,
            vdofs,
            pdofs,
            matrix,
            factorization: OnceLock::new(),
        })
    }

    pub fn n_unknowns(&self) -> usize {
        self.matrix.n
    }

    /// Factorizes on first use.
    pub fn factorization(&self) -> Result<&Factorization> {
        if let Some(f) = self.factorization.get() {
            return Ok(f);
        }
        let f = self.matrix.factor()?;
        Ok(self.factorization.get_or_init(|| f))
    }

    /// Assembled right-hand side for the given data, with Dirichlet values
    /// already lifted. Also returns the value of every constrained node.
    pub fn rhs(&self, forcing: &Forcing) -> (Vec<f64>, Vec<[f64; 2]>) {
        let mesh = &self.mesh;
        let nu = self.vdofs.n_free;
        let mut rhs = vec![0.0; self.matrix.n];
        let rule = degree4();

        let mut dvals = vec![[0.0; 2]; mesh.n_p2_nodes()];
        let mut lifted = false;
        if let Some(g) = forcing.boundary {
            for &node in &self.vdofs.constrained {
                let v = g(mesh.p2_point(node));
                if v != [0.0, 0.0] {
                    lifted = true;
                }
                dvals[node] = v;
            }
        }

        for t in 0..mesh.triangles.len() {
            let nodes = mesh.p2_nodes(t);
            let has_fixed = lifted && nodes.iter().any(|&n| self.vdofs.is_constrained(n));
            if forcing.body.is_none() && !has_fixed {
                continue;
            }
            let geom = TriGeom::new(mesh, t);
            let (v1, v2, p) = local_indices(mesh, &self.vdofs, &self.pdofs, t);
            if let Some(f) = forcing.body {
                for (l, w) in rule.points.iter().zip(&rule.weights) {
                    let fv = f(geom.point(*l));
                    let phi = p2_values(*l);
                    let w = w * geom.area;
                    for i in 0..6 {
                        if let Some(r) = v1[i] {
                            rhs[r] += w * fv[0] * phi[i];
                        }
                        if let Some(r) = v2[i] {
                            rhs[r] += w * fv[1] * phi[i];
                        }
                    }
                }
            }
            if has_fixed {
                let loc = local_matrices(&geom, &self.metric, &self.metric.rule());
                for j in 0..6 {
                    if !self.vdofs.is_constrained(nodes[j]) {
                        continue;
                    }
                    let g = dvals[nodes[j]];
                    for i in 0..6 {
                        if let Some(r) = v1[i] {
                            rhs[r] -= loc.k[i][j] * g[0];
                        }
                        if let Some(r) = v2[i] {
                            rhs[r] -= loc.k[i][j] * g[1];
                        }
                    }
                    for q in 0..3 {
                        if let Some(r) = p[q] {
                            rhs[r] -= loc.b1[q][j] * g[0] + loc.b2[q][j] * g[1];
                        }
                    }
                }
            }
        }

        if let Some(sigma) = forcing.interface {
            let (xs, ws) = gauss3();
            let lookup = EdgeLookup::new(mesh);
            let nv = mesh.n_vertices();
            for e in mesh.edges_with_tag(BoundaryTag::Interface) {
                let [a, b] = e.nodes;
                let Some(m) = lookup.get(a, b) else { continue };
                let (pa, pb) = (mesh.nodes[a], mesh.nodes[b]);
                let len = (pb[0] - pa[0]).hypot(pb[1] - pa[1]);
                let ids = [a, b, nv + m];
                for (s, w) in xs.iter().zip(&ws) {
                    let x1 = pa[0] + s * (pb[0] - pa[0]);
                    let sv = sigma(x1);
                    let phi = p2_edge_values(*s);
                    for i in 0..3 {
                        if let Some(r) = self.vdofs.index[ids[i]] {
                            rhs[r] += w * len * sv[0] * phi[i];
                            rhs[nu + r] += w * len * sv[1] * phi[i];
                        }
                    }
                }
            }
        }
        (rhs, dvals)
    }

    /// Solves for one set of data.
    pub fn solve(&self, forcing: &Forcing) -> Result<MixedField> {
        let (rhs, dvals) = self.rhs(forcing);
        let (x, residual) = self.factorization()?.solve(&rhs)?;
        Ok(self.field_from(&x, &dvals, residual))
    }

    /// Builds a field from a solution vector and constrained values.
    pub fn field_from(&self, x: &[f64], dvals: &[[f64; 2]], residual: f64) -> MixedField {
        let nu = self.vdofs.n_free;
        let mut field = MixedField::zero(self.mesh.clone(), self.setup.gauge);
        for (node, v) in field.velocity.iter_mut().enumerate() {
            *v = match self.vdofs.index[node] {
                Some(i) => [x[i], x[nu + i]],
                None => dvals[node],
            };
        }
        for (vtx, p) in field.pressure.iter_mut().enumerate() {
            *p = x[2 * nu + self.pdofs.index[vtx].expect("pressure is unconstrained")];
        }
        field.residual = residual;
        field
    }

    /// Solution vector of a field (inverse of [`StokesSystem::field_from`]
    /// without the multiplier).
    pub fn vector_of(&self, field: &MixedField) -> Vec<f64> {
        let nu = self.vdofs.n_free;
        let mut x = vec![0.0; self.matrix.n];
        for (node, v) in field.velocity.iter().enumerate() {
            if let Some(i) = self.vdofs.index[node] {
                x[i] = v[0];
                x[nu + i] = v[1];
            }
        }
        for (vtx, p) in field.pressure.iter().enumerate() {
            if let Some(i) = self.pdofs.index[vtx] {
                x[2 * nu + i] = *p;
            }
        }
        x
    }

    /// Relative residual of the discrete momentum and mass equations for a
    /// field, recomputed from scratch. The gauge multiplier is taken as
    /// zero, which is exact for compatible data.
    pub fn residual_of(&self, field: &MixedField, forcing: &Forcing) -> f64 {
        let (rhs, _) = self.rhs(forcing);
        let x = self.vector_of(field);
        let n = self.matrix.n;
        let m = if self.setup.gauge == Gauge::None { n } else { n - 1 };
        let ax = self.matrix.mul_vec(&x);
        let r = (0..m).fold(0.0f64, |a, i| a.max((ax[i] - rhs[i]).abs()));
        let scale = self.matrix.norm1() * x.iter().fold(0.0f64, |a, v| a.max(v.abs()))
            + rhs.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if scale == 0.0 {
            0.0
        } else {
            r / scale
        }
    }
}

/// Global unknowns of the six velocity nodes (both components) and three
/// pressure vertices of a triangle.
pub(crate) fn local_indices(
    mesh: &PeriodicMesh,
    vdofs: &DofMap,
    pdofs: &DofMap,
    t: usize,
) -> ([Option<usize>; 6], [Option<usize>; 6], [Option<usize>; 3]) {
    let nu = vdofs.n_free;
    let nodes = mesh.p2_nodes(t);
    let mut v1 = [None; 6];
    let mut v2 = [None; 6];
    for i in 0..6 {
        v1[i] = vdofs.index[nodes[i]];
        v2[i] = v1[i].map(|r| nu + r);
    }
    let tri = mesh.triangles[t];
    let mut p = [None; 3];
    for q in 0..3 {
        p[q] = pdofs.index[tri[q]].map(|r| 2 * nu + r);
    }
    (v1, v2, p)
}

/// Gauge row coefficients per pressure unknown: `∫ψ_j` for zero mean, a
/// unit vector for pinning.
fn gauge_weights(mesh: &PeriodicMesh, pdofs: &DofMap, gauge: Gauge) -> Vec<f64> {
    let mut w = vec![0.0; pdofs.n_free];
    match gauge {
        Gauge::None => {}
        Gauge::Pinned => {
            if !w.is_empty() {
                w[0] = 1.0;
            }
        }
        Gauge::ZeroMean => {
            for (t, tri) in mesh.triangles.iter().enumerate() {
                let a = mesh.triangle_area(t) / 3.0;
                for &v in tri {
                    if let Some(j) = pdofs.index[v] {
                        w[j] += a;
                    }
                }
            }
        }
    }
    w
}

/// Tags of boundary edges lying on the outer boundary of the mesh (edges
/// used by exactly one triangle whose midpoint is not periodically
/// identified with another node).
pub(crate) fn natural_boundary_tags(
    mesh: &PeriodicMesh,
    vdofs: &DofMap,
    dirichlet: &[BoundaryTag],
) -> Vec<BoundaryTag> {
    let nv = mesh.n_vertices();
    let mut members = vec![0u32; vdofs.class.len()];
    for &c in &vdofs.class {
        members[c] += 1;
    }
    let mut count = vec![0u8; mesh.edges.len()];
    for te in &mesh.tri_edges {
        for &e in te {
            count[e] = count[e].saturating_add(1);
        }
    }
    let lookup = EdgeLookup::new(mesh);
    let mut tags = Vec::new();
    for be in &mesh.boundary_edges {
        if dirichlet.contains(&be.tag)
            || matches!(be.tag, BoundaryTag::PeriodicLeft | BoundaryTag::PeriodicRight)
        {
            continue;
        }
        let Some(e) = lookup.get(be.nodes[0], be.nodes[1]) else {
            continue;
        };
        if count[e] == 1 && members[vdofs.class[nv + e]] == 1 && !tags.contains(&be.tag) {
            tags.push(be.tag);
        }
    }
    tags
}

fn check_kernel(mesh: &PeriodicMesh, setup: &StokesSetup, vdofs: &DofMap) -> Result<()> {
    if vdofs.constrained.is_empty() {
        return Err(Error::Singular(
            "velocity kernel: no Dirichlet boundary, so constant velocities solve the homogeneous problem"
                .into(),
        ));
    }
    let natural = natural_boundary_tags(mesh, vdofs, &setup.dirichlet);
    match (natural.is_empty(), setup.gauge) {
        (true, Gauge::None) => Err(Error::Singular(
            "pressure kernel: velocity prescribed on the whole boundary, so pressure is only defined up to a constant; choose a gauge"
                .into(),
        )),
        (false, Gauge::ZeroMean | Gauge::Pinned) => Err(Error::Config(format!(
            "natural boundary ({}) already fixes the pressure constant; use no gauge",
            natural.iter().map(|t| t.name()).collect::<Vec<_>>().join(", ")
        ))),
        _ => Ok(()),
    }
}

/// Convenience: assemble and solve once.
pub fn solve_transformed_stokes(
    mesh: Arc<PeriodicMesh>,
    metric: Metric,
    setup: StokesSetup,
    forcing: &Forcing,
) -> Result<MixedField> {
    StokesSystem::assemble(mesh, metric, setup)?.solve(forcing)
}

#[cfg(test)]
mod tests;
