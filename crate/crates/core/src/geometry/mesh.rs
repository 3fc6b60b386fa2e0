use crate::error::{Error, Result};
use std::collections::HashMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    /// Surface of a solid inclusion.
    Pore,
    Top,
    Bottom,
    /// The interface `S` (strip) or `Σ` (composite domain); interior unless
    /// the mesh is a restriction to one side.
    Interface,
    PeriodicLeft,
    PeriodicRight,
}

impl BoundaryTag {
    pub fn name(self) -> &'static str {
        match self {
            BoundaryTag::Pore => "pore",
            BoundaryTag::Top => "top",
            BoundaryTag::Bottom => "bottom",
            BoundaryTag::Interface => "interface_S",
            BoundaryTag::PeriodicLeft => "periodic_left",
            BoundaryTag::PeriodicRight => "periodic_right",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Region {
    AboveS,
    BelowS,
}

impl Region {
    pub fn name(self) -> &'static str {
        match self {
            Region::AboveS => "above_S",
            Region::BelowS => "below_S",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: BoundaryTag,
}

/// `slave` is identified with `master` across the periodic direction `axis`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PeriodicPair {
    pub slave: usize,
    pub master: usize,
    pub axis: usize,
}

/// A conforming triangulation with periodic node identification.
///
/// Quadratic elements use local node order: vertices 0, 1, 2, then the
/// midpoints of edges (0,1), (1,2), (2,0). `tri_edges[t][k]` is the global
/// edge joining local vertices `k` and `k+1`.
#[derive(Clone, Debug)]
pub struct PeriodicMesh {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub regions: Vec<Region>,
    /// Lattice cell `(i, j)` of each triangle for tiled parts, `None` for the
    /// graded free-fluid region.
    pub tiles: Vec<Option<[i32; 2]>>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub periodic_pairs: Vec<PeriodicPair>,
    /// Period along each axis, if periodic.
    pub periods: [Option<f64>; 2],
    /// Edge length of one lattice cell (1 for cell and strip meshes, ε otherwise).
    pub cell_size: f64,
    pub edges: Vec<[usize; 2]>,
    pub tri_edges: Vec<[usize; 3]>,
}

/// Summary statistics used in audits and reports.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeshQuality {
    pub min_angle_deg: f64,
    pub max_edge: f64,
    pub min_edge: f64,
    pub area: f64,
}

impl PeriodicMesh {
    pub(crate) fn assemble(
        nodes: Vec<[f64; 2]>,
        mut triangles: Vec<[usize; 3]>,
        regions: Vec<Region>,
        tiles: Vec<Option<[i32; 2]>>,
        boundary_edges: Vec<BoundaryEdge>,
        periodic_pairs: Vec<PeriodicPair>,
        periods: [Option<f64>; 2],
        cell_size: f64,
    ) -> Self {
        for t in triangles.iter_mut() {
            if signed_area(&nodes, *t) < 0.0 {
                t.swap(1, 2);
            }
        }
        let mut edge_id: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges = Vec::new();
        let mut tri_edges = Vec::with_capacity(triangles.len());
        for t in &triangles {
            let mut te = [0usize; 3];
            for k in 0..3 {
                let a = t[k];
                let b = t[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                let id = *edge_id.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edges.len() - 1
                });
                te[k] = id;
            }
            tri_edges.push(te);
        }
        PeriodicMesh {
            nodes,
            triangles,
            regions,
            tiles,
            boundary_edges,
            periodic_pairs,
            periods,
            cell_size,
            edges,
            tri_edges,
        }
    }

    pub fn n_vertices(&self) -> usize {
        self.nodes.len()
    }

    /// Vertices plus edge midpoints.
    pub fn n_p2_nodes(&self) -> usize {
        self.nodes.len() + self.edges.len()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        signed_area(&self.nodes, self.triangles[t])
    }

    pub fn centroid(&self, t: usize) -> [f64; 2] {
        let [a, b, c] = self.triangles[t];
        let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
        [
            (pa[0] + pb[0] + pc[0]) / 3.0,
            (pa[1] + pb[1] + pc[1]) / 3.0,
        ]
    }

    /// The six quadratic nodes of a triangle as global P2 indices.
    pub fn p2_nodes(&self, t: usize) -> [usize; 6] {
        let [a, b, c] = self.triangles[t];
        let nv = self.nodes.len();
        let e = self.tri_edges[t];
        [a, b, c, nv + e[0], nv + e[1], nv + e[2]]
    }

    /// Coordinates of a P2 node (vertex or edge midpoint).
    pub fn p2_point(&self, node: usize) -> [f64; 2] {
        let nv = self.nodes.len();
        if node < nv {
            self.nodes[node]
        } else {
            let [a, b] = self.edges[node - nv];
            midpoint(self.nodes[a], self.nodes[b])
        }
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn region_area(&self, region: Region) -> f64 {
        (0..self.triangles.len())
            .filter(|&t| self.regions[t] == region)
            .map(|t| self.triangle_area(t))
            .sum()
    }

    pub fn edges_with_tag(&self, tag: BoundaryTag) -> impl Iterator<Item = &BoundaryEdge> {
        self.boundary_edges.iter().filter(move |e| e.tag == tag)
    }

    pub fn quality(&self) -> MeshQuality {
        let mut min_angle = f64::INFINITY;
        let mut max_edge: f64 = 0.0;
        let mut min_edge = f64::INFINITY;
        for t in &self.triangles {
            let p = [self.nodes[t[0]], self.nodes[t[1]], self.nodes[t[2]]];
            for k in 0..3 {
                let a = p[k];
                let b = p[(k + 1) % 3];
                let c = p[(k + 2) % 3];
                let u = [b[0] - a[0], b[1] - a[1]];
                let v = [c[0] - a[0], c[1] - a[1]];
                let cos = (u[0] * v[0] + u[1] * v[1]) / (u[0].hypot(u[1]) * v[0].hypot(v[1]));
                min_angle = min_angle.min(cos.clamp(-1.0, 1.0).acos().to_degrees());
                let l = u[0].hypot(u[1]);
                max_edge = max_edge.max(l);
                min_edge = min_edge.min(l);
            }
        }
        MeshQuality {
            min_angle_deg: min_angle,
            max_edge,
            min_edge,
            area: self.total_area(),
        }
    }

    /// Checks orientation, region consistency, interface conformity and
    /// periodic pairing.
    pub fn audit(&self) -> Result<()> {
        let scale = self.quality().min_edge;
        for (t, tri) in self.triangles.iter().enumerate() {
            if self.triangle_area(t) <= 0.0 {
                return Err(Error::Geometry(format!("triangle {t} is not positively oriented")));
            }
            let ys: Vec<f64> = tri.iter().map(|&v| self.nodes[v][1]).collect();
            let lo = ys.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if lo < -1e-12 * scale && hi > 1e-12 * scale && self.has_interface() {
                return Err(Error::Geometry(format!("triangle {t} crosses the interface")));
            }
            let expect = if self.centroid(t)[1] > 0.0 {
                Region::AboveS
            } else {
                Region::BelowS
            };
            if self.regions[t] != expect {
                return Err(Error::Geometry(format!("triangle {t} has a wrong region tag")));
            }
        }
        let mut seen = vec![[false; 2]; self.nodes.len()];
        for p in &self.periodic_pairs {
            if p.slave == p.master || seen[p.slave][p.axis] {
                return Err(Error::Geometry(format!(
                    "periodic pairing is not a bijection at node {}",
                    p.slave
                )));
            }
            seen[p.slave][p.axis] = true;
            let a = self.nodes[p.slave];
            let b = self.nodes[p.master];
            let other = 1 - p.axis;
            let period = self.periods[p.axis].ok_or_else(|| {
                Error::Geometry(format!("pair along non-periodic axis {}", p.axis))
            })?;
            if a[other] != b[other] || (a[p.axis] - b[p.axis] - period).abs() > 1e-12 * period {
                return Err(Error::Geometry(format!(
                    "periodic partners {} and {} are not translates",
                    p.slave, p.master
                )));
            }
        }
        Ok(())
    }

    fn has_interface(&self) -> bool {
        self.boundary_edges
            .iter()
            .any(|e| e.tag == BoundaryTag::Interface)
    }

    /// Restriction to the triangles of one region, with interface edges
    /// kept as tagged boundary. Returns the mesh and, for each P2 node of the
    /// submesh, the P2 node of `self` it came from.
    pub fn restrict(&self, region: Region) -> (PeriodicMesh, Vec<usize>) {
        let mut vmap = vec![usize::MAX; self.nodes.len()];
        let mut nodes = Vec::new();
        let mut triangles = Vec::new();
        let mut tiles = Vec::new();
        let mut parent_tri = Vec::new();
        for (t, tri) in self.triangles.iter().enumerate() {
            if self.regions[t] != region {
                continue;
            }
            let mut nt = [0; 3];
            for k in 0..3 {
                let v = tri[k];
                if vmap[v] == usize::MAX {
                    vmap[v] = nodes.len();
                    nodes.push(self.nodes[v]);
                }
                nt[k] = vmap[v];
            }
            triangles.push(nt);
            tiles.push(self.tiles[t]);
            parent_tri.push(t);
        }
        let keep = |e: &BoundaryEdge| vmap[e.nodes[0]] != usize::MAX && vmap[e.nodes[1]] != usize::MAX;
        let boundary_edges: Vec<BoundaryEdge> = self
            .boundary_edges
            .iter()
            .filter(|e| keep(e))
            .filter(|e| {
                // Both endpoints survive, but the edge must also bound a kept triangle.
                let (a, b) = (e.nodes[0], e.nodes[1]);
                let (y0, y1) = (self.nodes[a][1], self.nodes[b][1]);
                match region {
                    Region::AboveS => y0 >= 0.0 && y1 >= 0.0,
                    Region::BelowS => y0 <= 0.0 && y1 <= 0.0,
                }
            })
            .map(|e| BoundaryEdge {
                nodes: [vmap[e.nodes[0]], vmap[e.nodes[1]]],
                tag: e.tag,
            })
            .collect();
        let periodic_pairs = self
            .periodic_pairs
            .iter()
            .filter(|p| vmap[p.slave] != usize::MAX && vmap[p.master] != usize::MAX)
            .map(|p| PeriodicPair {
                slave: vmap[p.slave],
                master: vmap[p.master],
                axis: p.axis,
            })
            .collect();
        let regions = vec![region; triangles.len()];
        let sub = PeriodicMesh::assemble(
            nodes,
            triangles,
            regions,
            tiles,
            boundary_edges,
            periodic_pairs,
            self.periods,
            self.cell_size,
        );
        let mut p2map = vec![usize::MAX; sub.n_p2_nodes()];
        for (st, &pt) in parent_tri.iter().enumerate() {
            let a = sub.p2_nodes(st);
            let b = self.p2_nodes(pt);
            for k in 0..6 {
                p2map[a[k]] = b[k];
            }
        }
        (sub, p2map)
    }
}

/// Hash lookup from vertex pairs to global edge ids.
pub struct EdgeLookup {
    map: HashMap<(usize, usize), usize>,
}

impl EdgeLookup {
    pub fn new(mesh: &PeriodicMesh) -> Self {
        let map = mesh
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| ((e[0], e[1]), i))
            .collect();
        EdgeLookup { map }
    }

    pub fn get(&self, a: usize, b: usize) -> Option<usize> {
        self.map.get(&(a.min(b), a.max(b))).copied()
    }
}

pub(crate) fn signed_area(nodes: &[[f64; 2]], t: [usize; 3]) -> f64 {
    let (a, b, c) = (nodes[t[0]], nodes[t[1]], nodes[t[2]]);
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

pub(crate) fn midpoint(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]
}
