//! One-sided gradient recovery on the interface from the free-fluid side.

use nalgebra::{DMatrix, DVector};

use crate::fem::MixedField;
use crate::transform::CurveSpec;

/// Candidate nodes of the first element layer above `x₂ = 0`.
pub(crate) struct InterfacePatch {
    /// `(x₁, x₂, node)` of every P2 node in a triangle touching the line,
    /// one representative per periodic class.
    nodes: Vec<(f64, f64, usize)>,
    radius: f64,
    period: f64,
}

impl InterfacePatch {
    pub(crate) fn new(field: &MixedField, period: f64) -> Self {
        let mesh = &field.mesh;
        let tol = 1e-10 * mesh.cell_size.max(1.0);
        let on = |v: usize| mesh.nodes[v][1].abs() < tol;
        let mut hmax: f64 = 0.0;
        let mut seen = vec![false; mesh.n_p2_nodes()];
        let mut nodes = Vec::new();
        for (t, tri) in mesh.triangles.iter().enumerate() {
            if mesh.centroid(t)[1] <= 0.0 || !tri.iter().any(|&v| on(v)) {
                continue;
            }
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                if on(a) && on(b) {
                    hmax = hmax.max((mesh.nodes[a][0] - mesh.nodes[b][0]).abs());
                }
            }
            for n in mesh.p2_nodes(t) {
                let p = mesh.p2_point(n);
                if seen[n] || p[0] > period - tol {
                    continue;
                }
                seen[n] = true;
                nodes.push((p[0], p[1], n));
            }
        }
        InterfacePatch {
            nodes,
            radius: 1.5 * hmax,
            period,
        }
    }

    /// `∇u` at `(x₁, 0⁺)` from a least-squares quadratic fit to the nodal
    /// values within `1.5` interface edges of `x₁`. Returns `g[i][k] = ∂_i u_k`.
    pub(crate) fn gradient(&self, field: &MixedField, x1: f64) -> [[f64; 2]; 2] {
        let h = self.radius;
        let mut rows = Vec::new();
        for &(x, y, n) in &self.nodes {
            let dx = (x - x1 + 0.5 * self.period).rem_euclid(self.period) - 0.5 * self.period;
            if dx.abs() <= h {
                rows.push((dx / h, y / h, field.velocity[n]));
            }
        }
        let m = rows.len();
        let a = DMatrix::from_fn(m, 6, |r, c| {
            let (s, t, _) = rows[r];
            [1.0, s, t, s * s, s * t, t * t][c]
        });
        let svd = a.svd(true, true);
        let mut g = [[0.0; 2]; 2];
        for k in 0..2 {
            let b = DVector::from_fn(m, |r, _| rows[r].2[k]);
            let c = svd.solve(&b, 1e-12).unwrap_or_else(|_| DVector::zeros(6));
            g[0][k] = c[1] / h;
            g[1][k] = c[2] / h;
        }
        g
    }
}

/// `K_k = (M∇u_k)·e₂` at `(x₁, 0⁺)` for every abscissa of the grid.
pub fn stress_jump(u0: &MixedField, spec: &CurveSpec, x1_grid: &[f64]) -> Vec<[f64; 2]> {
    let patch = InterfacePatch::new(u0, spec.period);
    x1_grid
        .iter()
        .map(|&x1| {
            let g = patch.gradient(u0, x1);
            let gp = spec.gprime(x1);
            [
                -gp * g[0][0] + (1.0 + gp * gp) * g[1][0],
                -gp * g[0][1] + (1.0 + gp * gp) * g[1][1],
            ]
        })
        .collect()
}
