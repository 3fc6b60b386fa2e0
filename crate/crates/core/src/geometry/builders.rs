use super::inclusion::InclusionSpec;
use super::mesh::{BoundaryEdge, BoundaryTag, PeriodicMesh, PeriodicPair, Region};
use super::templates::{free_template, pore_template, refine_cdt, side_divisions, Template};
use crate::error::{Error, Result};
use std::collections::HashMap;

/// Default number of porous layers below the interface in a strip.
pub const DEFAULT_PORE_LAYERS: usize = 6;
/// Default number of free-fluid layers above the interface in a strip.
pub const DEFAULT_TOP_HEIGHT: usize = 3;

/// Glues translated templates on an integer lattice.
struct Tiler {
    n: usize,
    cols: usize,
    period: f64,
    cell: f64,
    nodes: Vec<[f64; 2]>,
    keys: HashMap<(i64, i64), usize>,
    triangles: Vec<[usize; 3]>,
    tiles: Vec<Option<[i32; 2]>>,
    pore_edges: Vec<[usize; 2]>,
}

impl Tiler {
    fn new(n: usize, cols: usize, period: f64, cell: f64) -> Self {
        Tiler {
            n,
            cols,
            period,
            cell,
            nodes: Vec::new(),
            keys: HashMap::new(),
            triangles: Vec::new(),
            tiles: Vec::new(),
            pore_edges: Vec::new(),
        }
    }

    fn key_point(&self, k: (i64, i64)) -> [f64; 2] {
        let total = (self.cols * self.n) as f64;
        [
            self.period * (k.0 as f64 / total),
            self.cell * (k.1 as f64 / self.n as f64),
        ]
    }

    fn node_at(&mut self, k: (i64, i64)) -> usize {
        if let Some(&i) = self.keys.get(&k) {
            return i;
        }
        let p = self.key_point(k);
        self.nodes.push(p);
        self.keys.insert(k, self.nodes.len() - 1);
        self.nodes.len() - 1
    }

    fn place(&mut self, tpl: &Template, i: i32, j: i32) {
        debug_assert_eq!(tpl.n, self.n);
        let n = self.n as i64;
        let ids: Vec<usize> = tpl
            .nodes
            .iter()
            .zip(&tpl.lattice)
            .map(|(p, lat)| match lat {
                Some((k1, k2)) => self.node_at((i as i64 * n + k1, j as i64 * n + k2)),
                None => {
                    self.nodes.push([
                        self.cell * (i as f64 + p[0]),
                        self.cell * (j as f64 + p[1]),
                    ]);
                    self.nodes.len() - 1
                }
            })
            .collect();
        for t in &tpl.triangles {
            self.triangles.push([ids[t[0]], ids[t[1]], ids[t[2]]]);
            self.tiles.push(Some([i, j]));
        }
        for e in &tpl.pore_edges {
            self.pore_edges.push([ids[e[0]], ids[e[1]]]);
        }
    }

    /// Edges between consecutive lattice nodes on a horizontal line.
    fn horizontal(&mut self, k2: i64, tag: BoundaryTag) -> Vec<BoundaryEdge> {
        let m = (self.cols * self.n) as i64;
        (0..m)
            .map(|k| BoundaryEdge {
                nodes: [self.node_at((k, k2)), self.node_at((k + 1, k2))],
                tag,
            })
            .collect()
    }

    fn vertical(&mut self, k1: i64, from: i64, to: i64, tag: BoundaryTag) -> Vec<BoundaryEdge> {
        (from..to)
            .map(|k| BoundaryEdge {
                nodes: [self.node_at((k1, k)), self.node_at((k1, k + 1))],
                tag,
            })
            .collect()
    }

    fn horizontal_pairs(&mut self, from: i64, to: i64) -> Vec<PeriodicPair> {
        let m = (self.cols * self.n) as i64;
        (from..=to)
            .map(|k| PeriodicPair {
                slave: self.node_at((m, k)),
                master: self.node_at((0, k)),
                axis: 0,
            })
            .collect()
    }
}

fn region_of(nodes: &[[f64; 2]], t: [usize; 3]) -> Region {
    let y = (nodes[t[0]][1] + nodes[t[1]][1] + nodes[t[2]][1]) / 3.0;
    if y > 0.0 {
        Region::AboveS
    } else {
        Region::BelowS
    }
}

fn pore_tagged(edges: &[[usize; 2]]) -> Vec<BoundaryEdge> {
    edges
        .iter()
        .map(|&nodes| BoundaryEdge {
            nodes,
            tag: BoundaryTag::Pore,
        })
        .collect()
}

fn check_h(h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("mesh size must be positive, got {h}")))
    }
}

/// Mesh of the fluid part of the unit cell, periodic in both directions.
pub fn build_cell_mesh(inclusion: &InclusionSpec, h: f64) -> Result<PeriodicMesh> {
    check_h(h)?;
    let tpl = pore_template(inclusion, h.min(0.5))?;
    let n = tpl.n;
    let mut tl = Tiler::new(n, 1, 1.0, 1.0);
    tl.place(&tpl, 0, 0);
    let ni = n as i64;
    let mut edges = pore_tagged(&tl.pore_edges);
    edges.extend(tl.horizontal(0, BoundaryTag::Bottom));
    edges.extend(tl.horizontal(ni, BoundaryTag::Top));
    edges.extend(tl.vertical(0, 0, ni, BoundaryTag::PeriodicLeft));
    edges.extend(tl.vertical(ni, 0, ni, BoundaryTag::PeriodicRight));
    let mut pairs = tl.horizontal_pairs(0, ni);
    for k in 0..=ni {
        pairs.push(PeriodicPair {
            slave: tl.node_at((k, ni)),
            master: tl.node_at((k, 0)),
            axis: 1,
        });
    }
    // The cell sits above the interface line for tagging purposes.
    let regions = vec![Region::AboveS; tl.triangles.len()];
    Ok(PeriodicMesh::assemble(
        tl.nodes,
        tl.triangles,
        regions,
        tl.tiles,
        edges,
        pairs,
        [Some(1.0), Some(1.0)],
        1.0,
    ))
}

/// Mesh of the truncated strip `(0,1) × (-n_pore_layers, top_height)`
/// with one inclusion per unit cell below `y₂ = 0`, periodic in `y₁`.
pub fn build_strip_mesh(
    inclusion: &InclusionSpec,
    n_pore_layers: usize,
    top_height: usize,
    h: f64,
) -> Result<PeriodicMesh> {
    check_h(h)?;
    if n_pore_layers < 2 {
        return Err(Error::Config(format!(
            "strip needs at least 2 pore layers, got {n_pore_layers}"
        )));
    }
    if top_height < 1 {
        return Err(Error::Config("strip needs a free layer of height at least 1".into()));
    }
    let pore = pore_template(inclusion, h.min(0.5))?;
    let free = free_template(pore.n);
    let n = pore.n as i64;
    let mut tl = Tiler::new(pore.n, 1, 1.0, 1.0);
    for j in 1..=n_pore_layers as i32 {
        tl.place(&pore, 0, -j);
    }
    for j in 0..top_height as i32 {
        tl.place(&free, 0, j);
    }
    let bottom = -(n_pore_layers as i64) * n;
    let top = top_height as i64 * n;
    let mut edges = pore_tagged(&tl.pore_edges);
    edges.extend(tl.horizontal(bottom, BoundaryTag::Bottom));
    edges.extend(tl.horizontal(top, BoundaryTag::Top));
    edges.extend(tl.horizontal(0, BoundaryTag::Interface));
    edges.extend(tl.vertical(0, bottom, top, BoundaryTag::PeriodicLeft));
    edges.extend(tl.vertical(n, bottom, top, BoundaryTag::PeriodicRight));
    let pairs = tl.horizontal_pairs(bottom, top);
    let regions = tl.triangles.iter().map(|&t| region_of(&tl.nodes, t)).collect();
    Ok(PeriodicMesh::assemble(
        tl.nodes,
        tl.triangles,
        regions,
        tl.tiles,
        edges,
        pairs,
        [Some(1.0), None],
        1.0,
    ))
}

/// Geometry and resolution of the composite domain `Ω^ε`.
#[derive(Clone, Debug, PartialEq)]
pub struct EpsMeshParams {
    pub eps: f64,
    pub length: f64,
    pub h_free: f64,
    pub k_depth: f64,
    /// Element size inside one pore cell, in cell units.
    pub h_micro: f64,
    /// Element size far from the interface in the free fluid.
    pub h_macro: f64,
    /// Layers of structured micro-resolution cells above `Σ`.
    pub band_layers: usize,
}

/// `value / eps` as an integer, or a configuration error.
pub fn cells_per(value: f64, eps: f64, what: &str) -> Result<usize> {
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Config(format!("ε must be positive, got {eps}")));
    }
    let q = value / eps;
    let r = q.round();
    if r < 1.0 || (q - r).abs() > 1e-9 * q.max(1.0) {
        return Err(Error::Config(format!(
            "{what} = {value} is not an integer multiple of ε = {eps}"
        )));
    }
    Ok(r as usize)
}

/// Grid of layer heights from `y0` to `y1` growing geometrically from `d0`
/// up to `dmax`.
fn graded_heights(y0: f64, y1: f64, d0: f64, dmax: f64) -> Vec<f64> {
    const GROWTH: f64 = 1.25;
    let mut ys = vec![y0];
    let mut y = y0;
    let mut d = d0;
    while y1 - y > 1.5 * d {
        y += d;
        ys.push(y);
        d = (d * GROWTH).min(dmax);
    }
    ys.push(y1);
    ys
}

/// Mesh of `Ω^ε`: the free fluid `(0,L) × (0,h_free)` over the pore space
/// of `(0,L) × (-K,0)` with ε-scaled inclusions, periodic in `x₁`.
pub fn build_eps_mesh(inclusion: &InclusionSpec, p: &EpsMeshParams) -> Result<PeriodicMesh> {
    check_h(p.h_micro)?;
    check_h(p.h_macro)?;
    let cols = cells_per(p.length, p.eps, "L")?;
    let rows = if p.k_depth == 0.0 {
        0
    } else {
        cells_per(p.k_depth, p.eps, "K_depth")?
    };
    let band = p.band_layers.max(1);
    if (band as f64) * p.eps >= p.h_free {
        return Err(Error::Config(format!(
            "free height {} must exceed {band} layers of ε = {}",
            p.h_free, p.eps
        )));
    }
    let pore = pore_template(inclusion, p.h_micro.min(0.5))?;
    let free = free_template(pore.n);
    let n = pore.n as i64;
    let mut tl = Tiler::new(pore.n, cols, p.length, p.eps);
    for j in 1..=rows as i32 {
        for i in 0..cols as i32 {
            tl.place(&pore, i, -j);
        }
    }
    for j in 0..band as i32 {
        for i in 0..cols as i32 {
            tl.place(&free, i, j);
        }
    }

    // Graded free-fluid region above the band.
    let m = (cols as i64) * n;
    let band_top = band as i64 * n;
    let y0 = tl.key_point((0, band_top))[1];
    let ys = graded_heights(y0, p.h_free, p.eps / n as f64, p.h_macro);
    let m_top = ((p.length / p.h_macro).ceil() as usize).max(4);
    let mut pts: Vec<[f64; 2]> = Vec::new();
    let mut bottom_keys = Vec::new();
    for k in 0..m {
        pts.push(tl.key_point((k, band_top)));
        bottom_keys.push((k, band_top));
    }
    let right_start = pts.len();
    pts.push(tl.key_point((m, band_top)));
    bottom_keys.push((m, band_top));
    for &y in &ys[1..] {
        pts.push([p.length, y]);
    }
    let top_start = pts.len() - 1;
    for k in (1..m_top).rev() {
        pts.push([p.length * (k as f64 / m_top as f64), p.h_free]);
    }
    let left_start = pts.len();
    for &y in ys[1..].iter().rev() {
        pts.push([0.0, y]);
    }
    let count = pts.len();
    let cons: Vec<[usize; 2]> = (0..count).map(|i| [i, (i + 1) % count]).collect();
    let area = 3f64.sqrt() / 4.0 * p.h_macro * p.h_macro;
    let (gnodes, gtris) = refine_cdt(&pts, cons, area, |_| true)?;

    let mut ids = Vec::with_capacity(gnodes.len());
    for (i, q) in gnodes.iter().enumerate() {
        if i < m as usize {
            ids.push(tl.node_at(bottom_keys[i]));
        } else if i == right_start {
            ids.push(tl.node_at(bottom_keys[m as usize]));
        } else {
            tl.nodes.push(*q);
            ids.push(tl.nodes.len() - 1);
        }
    }
    for t in &gtris {
        tl.triangles.push([ids[t[0]], ids[t[1]], ids[t[2]]]);
        tl.tiles.push(None);
    }
    let right_nodes: Vec<usize> = (right_start..=top_start).map(|i| ids[i]).collect();
    let mut left_nodes: Vec<usize> = (left_start..count).map(|i| ids[i]).collect();
    left_nodes.reverse();
    left_nodes.insert(0, tl.node_at((0, band_top)));
    let top_nodes: Vec<usize> = std::iter::once(ids[top_start])
        .chain((top_start + 1..left_start).map(|i| ids[i]))
        .chain(std::iter::once(*left_nodes.last().expect("left side is nonempty")))
        .collect();

    let bottom = -(rows as i64) * n;
    let mut edges = pore_tagged(&tl.pore_edges);
    edges.extend(tl.horizontal(bottom, BoundaryTag::Bottom));
    if rows > 0 {
        edges.extend(tl.horizontal(0, BoundaryTag::Interface));
    }
    edges.extend(tl.vertical(0, bottom, band_top, BoundaryTag::PeriodicLeft));
    edges.extend(tl.vertical(m, bottom, band_top, BoundaryTag::PeriodicRight));
    for w in left_nodes.windows(2) {
        edges.push(BoundaryEdge {
            nodes: [w[0], w[1]],
            tag: BoundaryTag::PeriodicLeft,
        });
    }
    for w in right_nodes.windows(2) {
        edges.push(BoundaryEdge {
            nodes: [w[0], w[1]],
            tag: BoundaryTag::PeriodicRight,
        });
    }
    for w in top_nodes.windows(2) {
        edges.push(BoundaryEdge {
            nodes: [w[0], w[1]],
            tag: BoundaryTag::Top,
        });
    }
    let mut pairs = tl.horizontal_pairs(bottom, band_top);
    for (s, mst) in right_nodes.iter().zip(&left_nodes).skip(1) {
        pairs.push(PeriodicPair {
            slave: *s,
            master: *mst,
            axis: 0,
        });
    }
    let regions = tl.triangles.iter().map(|&t| region_of(&tl.nodes, t)).collect();
    Ok(PeriodicMesh::assemble(
        tl.nodes,
        tl.triangles,
        regions,
        tl.tiles,
        edges,
        pairs,
        [Some(p.length), None],
        p.eps,
    ))
}

/// Structured mesh of `(0,L) × (y0,y1)`, periodic in `x₁`, with `nx × ny`
/// squares split into right triangles. A grid line at `x₂ = 0` strictly
/// inside the box is tagged as the interface.
pub fn build_box_mesh(
    length: f64,
    y0: f64,
    y1: f64,
    nx: usize,
    ny: usize,
    bottom: BoundaryTag,
    top: BoundaryTag,
) -> Result<PeriodicMesh> {
    if !(length > 0.0 && y1 > y0) || nx < 2 || ny < 1 {
        return Err(Error::Config("degenerate box mesh".into()));
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        let y = if j == ny {
            y1
        } else {
            y0 + (y1 - y0) * (j as f64 / ny as f64)
        };
        for i in 0..=nx {
            nodes.push([length * (i as f64 / nx as f64), y]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    let mut edges = Vec::new();
    for i in 0..nx {
        edges.push(BoundaryEdge {
            nodes: [id(i, 0), id(i + 1, 0)],
            tag: bottom,
        });
        edges.push(BoundaryEdge {
            nodes: [id(i, ny), id(i + 1, ny)],
            tag: top,
        });
    }
    for j in 1..ny {
        if nodes[id(0, j)][1] == 0.0 {
            for i in 0..nx {
                edges.push(BoundaryEdge {
                    nodes: [id(i, j), id(i + 1, j)],
                    tag: BoundaryTag::Interface,
                });
            }
        }
    }
    let mut pairs = Vec::new();
    for j in 0..ny {
        edges.push(BoundaryEdge {
            nodes: [id(0, j), id(0, j + 1)],
            tag: BoundaryTag::PeriodicLeft,
        });
        edges.push(BoundaryEdge {
            nodes: [id(nx, j), id(nx, j + 1)],
            tag: BoundaryTag::PeriodicRight,
        });
    }
    for j in 0..=ny {
        pairs.push(PeriodicPair {
            slave: id(nx, j),
            master: id(0, j),
            axis: 0,
        });
    }
    let regions = triangles.iter().map(|&t| region_of(&nodes, t)).collect();
    let tiles = vec![None; triangles.len()];
    let cell = (y1 - y0) / ny as f64;
    Ok(PeriodicMesh::assemble(
        nodes,
        triangles,
        regions,
        tiles,
        edges,
        pairs,
        [Some(length), None],
        cell,
    ))
}

/// Side subdivisions used by the templates for a target size `h`.
pub fn template_divisions(h: f64) -> usize {
    side_divisions(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn box_mesh_is_valid() {
        let m = build_box_mesh(2.0, 0.0, 1.0, 8, 4, BoundaryTag::Interface, BoundaryTag::Top).unwrap();
        m.audit().unwrap();
        assert!((m.total_area() - 2.0).abs() < 1e-14);
        assert_eq!(m.periodic_pairs.len(), 5);
    }

    #[test]
    fn graded_heights_are_monotone() {
        let ys = graded_heights(0.1, 1.0, 0.01, 0.1);
        assert_eq!(ys[0], 0.1);
        assert_eq!(*ys.last().unwrap(), 1.0);
        assert!(ys.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn cell_mesh_area_circle() {
        let m = build_cell_mesh(&InclusionSpec::centered_circle(0.25), 0.05).unwrap();
        m.audit().unwrap();
        assert!((m.total_area() - (1.0 - PI / 16.0)).abs() < 2e-3);
        assert!(m.quality().min_angle_deg >= 20.0);
    }

    #[test]
    fn integer_multiples() {
        assert_eq!(cells_per(1.0, 0.25, "L").unwrap(), 4);
        assert!(cells_per(1.0, 0.3, "L").is_err());
        assert_eq!(cells_per(1.0, 1.0 / 16.0, "L").unwrap(), 16);
    }
}
