//! Quadratic and linear Lagrange shape functions on straight triangles.

use crate::geometry::PeriodicMesh;

/// Geometric data of one triangle.
#[derive(Clone, Copy, Debug)]
pub struct TriGeom {
    pub vertices: [[f64; 2]; 3],
    pub area: f64,
    /// Gradients of the barycentric coordinates.
    pub grad_lambda: [[f64; 2]; 3],
}

impl TriGeom {
    pub fn new(mesh: &PeriodicMesh, t: usize) -> Self {
        let [a, b, c] = mesh.triangles[t];
        Self::from_points([mesh.nodes[a], mesh.nodes[b], mesh.nodes[c]])
    }

    pub fn from_points(v: [[f64; 2]; 3]) -> Self {
        let [p0, p1, p2] = v;
        let det = (p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]);
        let grad_lambda = [
            [(p1[1] - p2[1]) / det, (p2[0] - p1[0]) / det],
            [(p2[1] - p0[1]) / det, (p0[0] - p2[0]) / det],
            [(p0[1] - p1[1]) / det, (p1[0] - p0[0]) / det],
        ];
        TriGeom {
            vertices: v,
            area: 0.5 * det,
            grad_lambda,
        }
    }

    pub fn point(&self, l: [f64; 3]) -> [f64; 2] {
        let v = &self.vertices;
        [
            l[0] * v[0][0] + l[1] * v[1][0] + l[2] * v[2][0],
            l[0] * v[0][1] + l[1] * v[1][1] + l[2] * v[2][1],
        ]
    }

    /// Barycentric coordinates of `p`.
    pub fn barycentric(&self, p: [f64; 2]) -> [f64; 3] {
        let v = &self.vertices;
        let g = &self.grad_lambda;
        let l1 = g[1][0] * (p[0] - v[0][0]) + g[1][1] * (p[1] - v[0][1]);
        let l2 = g[2][0] * (p[0] - v[0][0]) + g[2][1] * (p[1] - v[0][1]);
        [1.0 - l1 - l2, l1, l2]
    }
}

/// P2 values in local order (vertices, then edges 01, 12, 20).
pub fn p2_values(l: [f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

pub fn p2_grads(l: [f64; 3], g: &[[f64; 2]; 3]) -> [[f64; 2]; 6] {
    let mut out = [[0.0; 2]; 6];
    for i in 0..3 {
        let s = 4.0 * l[i] - 1.0;
        out[i] = [s * g[i][0], s * g[i][1]];
    }
    let pairs = [(0, 1), (1, 2), (2, 0)];
    for (k, &(i, j)) in pairs.iter().enumerate() {
        out[3 + k] = [
            4.0 * (l[i] * g[j][0] + l[j] * g[i][0]),
            4.0 * (l[i] * g[j][1] + l[j] * g[i][1]),
        ];
    }
    out
}

/// P2 values along an edge parametrized by `s ∈ [0,1]` from its first to
/// its second vertex, in order (first vertex, second vertex, midpoint).
pub fn p2_edge_values(s: f64) -> [f64; 3] {
    let a = 1.0 - s;
    [a * (2.0 * a - 1.0), s * (2.0 * s - 1.0), 4.0 * a * s]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_of_unity_and_nodality() {
        let l = [0.2, 0.3, 0.5];
        let s: f64 = p2_values(l).iter().sum();
        assert!((s - 1.0).abs() < 1e-15);
        let nodes = [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.5, 0.5, 0.0],
            [0.0, 0.5, 0.5],
            [0.5, 0.0, 0.5],
        ];
        for (i, n) in nodes.iter().enumerate() {
            let v = p2_values(*n);
            for (j, vj) in v.iter().enumerate() {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((vj - e).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn gradients_reproduce_quadratics() {
        let geom = TriGeom::from_points([[0.1, 0.2], [0.9, 0.3], [0.4, 1.1]]);
        let f = |p: [f64; 2]| p[0] * p[0] - 2.0 * p[0] * p[1] + 3.0 * p[1];
        let nodes = [
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.5, 0.5, 0.0],
            [0.0, 0.5, 0.5],
            [0.5, 0.0, 0.5],
        ];
        let vals: Vec<f64> = nodes.iter().map(|l| f(geom.point(*l))).collect();
        let l = [0.3, 0.3, 0.4];
        let p = geom.point(l);
        let g = p2_grads(l, &geom.grad_lambda);
        let gx: f64 = (0..6).map(|i| vals[i] * g[i][0]).sum();
        let gy: f64 = (0..6).map(|i| vals[i] * g[i][1]).sum();
        assert!((gx - (2.0 * p[0] - 2.0 * p[1])).abs() < 1e-13);
        assert!((gy - (-2.0 * p[0] + 3.0)).abs() < 1e-13);
        let b = geom.barycentric(p);
        for k in 0..3 {
            assert!((b[k] - l[k]).abs() < 1e-14);
        }
    }
}
