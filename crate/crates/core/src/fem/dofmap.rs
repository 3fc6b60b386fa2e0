//! Degree-of-freedom numbering with periodic identification and strong
//! Dirichlet constraints.

use crate::geometry::{BoundaryTag, EdgeLookup, PeriodicMesh};

/// Numbering of scalar unknowns on the vertices (linear) or on vertices and
/// edge midpoints (quadratic) of a mesh.
#[derive(Clone, Debug)]
pub struct DofMap {
    /// Smallest node id in the periodic class of each node.
    pub class: Vec<usize>,
    /// Unknown index of each node; `None` for constrained nodes.
    pub index: Vec<Option<usize>>,
    pub n_free: usize,
    /// Every constrained node (all class members).
    pub constrained: Vec<usize>,
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind((0..n).collect())
    }

    fn find(&mut self, mut a: usize) -> usize {
        while self.0[a] != a {
            self.0[a] = self.0[self.0[a]];
            a = self.0[a];
        }
        a
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        // Keep the smaller id as root so representatives are deterministic.
        if ra < rb {
            self.0[rb] = ra;
        } else if rb < ra {
            self.0[ra] = rb;
        }
    }
}

impl DofMap {
    /// Continuous piecewise-linear numbering (no constraints).
    pub fn linear(mesh: &PeriodicMesh) -> Self {
        let mut uf = UnionFind::new(mesh.n_vertices());
        for p in &mesh.periodic_pairs {
            uf.union(p.slave, p.master);
        }
        Self::finish(uf, vec![false; mesh.n_vertices()])
    }

    /// Continuous piecewise-quadratic numbering with homogeneous or
    /// prescribed values on edges carrying one of `dirichlet` tags.
    pub fn quadratic(mesh: &PeriodicMesh, dirichlet: &[BoundaryTag]) -> Self {
        let nv = mesh.n_vertices();
        let mut uf = UnionFind::new(mesh.n_p2_nodes());
        let mut partner = [vec![usize::MAX; nv], vec![usize::MAX; nv]];
        for p in &mesh.periodic_pairs {
            uf.union(p.slave, p.master);
            partner[p.axis][p.slave] = p.master;
        }
        if !mesh.periodic_pairs.is_empty() {
            let lookup = EdgeLookup::new(mesh);
            for (e, &[a, b]) in mesh.edges.iter().enumerate() {
                for part in &partner {
                    let (pa, pb) = (part[a], part[b]);
                    if pa == usize::MAX || pb == usize::MAX {
                        continue;
                    }
                    if let Some(e2) = lookup.get(pa, pb) {
                        uf.union(nv + e, nv + e2);
                    }
                }
            }
        }
        let mut fixed = vec![false; mesh.n_p2_nodes()];
        if !dirichlet.is_empty() {
            let lookup = EdgeLookup::new(mesh);
            for be in &mesh.boundary_edges {
                if !dirichlet.contains(&be.tag) {
                    continue;
                }
                let [a, b] = be.nodes;
                fixed[a] = true;
                fixed[b] = true;
                if let Some(e) = lookup.get(a, b) {
                    fixed[nv + e] = true;
                }
            }
        }
        Self::finish(uf, fixed)
    }

    fn finish(mut uf: UnionFind, fixed: Vec<bool>) -> Self {
        let n = fixed.len();
        let class: Vec<usize> = (0..n).map(|i| uf.find(i)).collect();
        let mut class_fixed = vec![false; n];
        for i in 0..n {
            if fixed[i] {
                class_fixed[class[i]] = true;
            }
        }
        let mut index = vec![None; n];
        let mut n_free = 0;
        let mut constrained = Vec::new();
        for i in 0..n {
            let r = class[i];
            if class_fixed[r] {
                constrained.push(i);
            } else if r == i {
                index[i] = Some(n_free);
                n_free += 1;
            } else {
                index[i] = index[r];
            }
        }
        DofMap {
            class,
            index,
            n_free,
            constrained,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.class.len()
    }

    pub fn is_constrained(&self, node: usize) -> bool {
        self.index[node].is_none()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_box_mesh, build_cell_mesh, InclusionSpec};

    #[test]
    fn periodic_box_identifies_sides() {
        let mesh = build_box_mesh(1.0, 0.0, 1.0, 4, 4, BoundaryTag::Bottom, BoundaryTag::Top).unwrap();
        let p1 = DofMap::linear(&mesh);
        assert_eq!(p1.n_free, 4 * 5);
        let p2 = DofMap::quadratic(&mesh, &[BoundaryTag::Bottom, BoundaryTag::Top]);
        // 8 columns of nodes after identification, 7 interior rows.
        assert_eq!(p2.n_free, 8 * 7);
        for i in 0..p2.n_nodes() {
            let (a, b) = (mesh.p2_point(i), mesh.p2_point(p2.class[i]));
            assert!((a[1] - b[1]).abs() < 1e-14);
        }
    }

    #[test]
    fn cell_mesh_is_doubly_periodic() {
        let inc = InclusionSpec::centered_circle(0.25);
        let mesh = build_cell_mesh(&inc, 0.2).unwrap();
        let p2 = DofMap::quadratic(&mesh, &[BoundaryTag::Pore]);
        let corner = (0..mesh.n_vertices())
            .filter(|&v| {
                let p = mesh.nodes[v];
                (p[0] == 0.0 || p[0] == 1.0) && (p[1] == 0.0 || p[1] == 1.0)
            })
            .collect::<Vec<_>>();
        assert_eq!(corner.len(), 4);
        let c0 = p2.class[corner[0]];
        assert!(corner.iter().all(|&c| p2.class[c] == c0));
        for i in 0..p2.n_nodes() {
            let (a, b) = (mesh.p2_point(i), mesh.p2_point(p2.class[i]));
            let d0 = (a[0] - b[0]).abs();
            let d1 = (a[1] - b[1]).abs();
            assert!(d0 < 1e-12 || (d0 - 1.0).abs() < 1e-12);
            assert!(d1 < 1e-12 || (d1 - 1.0).abs() < 1e-12);
        }
    }
}
