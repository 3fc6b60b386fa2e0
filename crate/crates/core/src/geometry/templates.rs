//! Unit-cell triangulations that tile without hanging nodes.
//!
//! Every template has exactly `n + 1` equispaced nodes on each side of the
//! unit square, placed at `k/n`. Side nodes carry integer lattice
//! coordinates so that translated copies can be glued exactly.

use super::inclusion::InclusionSpec;
use crate::error::{Error, Result};
use spade::{
    AngleLimit, ConstrainedDelaunayTriangulation, Point2, RefinementParameters, Triangulation,
};
use std::collections::HashMap;
use std::f64::consts::FRAC_PI_4;

const MIN_ANGLE_DEG: f64 = 28.0;
const MAX_STEINER: usize = 2_000_000;

#[derive(Clone, Debug)]
pub(crate) struct Template {
    pub n: usize,
    pub nodes: Vec<[f64; 2]>,
    pub lattice: Vec<Option<(i64, i64)>>,
    pub triangles: Vec<[usize; 3]>,
    pub pore_edges: Vec<[usize; 2]>,
}

/// Number of side subdivisions for target edge length `h` (even, ≥ 2).
pub(crate) fn side_divisions(h: f64) -> usize {
    let n = (1.0 / h - 1e-9).ceil().max(2.0) as usize;
    n + n % 2
}

pub(crate) fn lattice_coord(k: i64, n: usize) -> f64 {
    k as f64 / n as f64
}

/// Triangulates the polygonal domain bounded by `constraints` and keeps
/// the faces whose centroid satisfies `inside`. Input points keep their
/// indices; refinement vertices follow.
pub(crate) fn refine_cdt(
    points: &[[f64; 2]],
    constraints: Vec<[usize; 2]>,
    max_area: f64,
    inside: impl Fn([f64; 2]) -> bool,
) -> Result<(Vec<[f64; 2]>, Vec<[usize; 3]>)> {
    let verts: Vec<Point2<f64>> = points.iter().map(|p| Point2::new(p[0], p[1])).collect();
    let mut cdt = ConstrainedDelaunayTriangulation::<Point2<f64>>::bulk_load_cdt(verts, constraints)
        .map_err(|e| Error::Geometry(format!("triangulation failed: {e:?}")))?;
    if cdt.num_vertices() != points.len() {
        return Err(Error::Geometry("duplicate boundary points".into()));
    }
    let params = RefinementParameters::<f64>::new()
        .with_angle_limit(AngleLimit::from_deg(MIN_ANGLE_DEG))
        .with_max_allowed_area(max_area)
        .keep_constraint_edges()
        .exclude_outer_faces(true)
        .with_max_additional_vertices(MAX_STEINER);
    let result = cdt.refine(params);
    if !result.refinement_complete {
        log::warn!("mesh refinement stopped at the vertex budget");
    }
    let mut nodes: Vec<[f64; 2]> = points.to_vec();
    let mut index: Vec<usize> = (0..cdt.num_vertices()).collect();
    for v in cdt.vertices() {
        let i = v.fix().index();
        if i >= points.len() {
            let p = v.position();
            index[i] = nodes.len();
            nodes.push([p.x, p.y]);
        }
    }
    let mut tris = Vec::new();
    for f in cdt.inner_faces() {
        let vs = f.vertices();
        let ids = [
            index[vs[0].fix().index()],
            index[vs[1].fix().index()],
            index[vs[2].fix().index()],
        ];
        let c = [
            (nodes[ids[0]][0] + nodes[ids[1]][0] + nodes[ids[2]][0]) / 3.0,
            (nodes[ids[0]][1] + nodes[ids[1]][1] + nodes[ids[2]][1]) / 3.0,
        ];
        if inside(c) {
            tris.push(ids);
        }
    }
    // Drop vertices that ended up outside the kept faces.
    let mut used = vec![false; nodes.len()];
    for t in &tris {
        for &v in t {
            used[v] = true;
        }
    }
    if used[..points.len()].iter().any(|u| !u) {
        return Err(Error::Geometry(
            "a boundary point is not attached to the triangulation".into(),
        ));
    }
    let mut remap = vec![usize::MAX; nodes.len()];
    let mut kept = Vec::new();
    for (i, p) in nodes.iter().enumerate() {
        if used[i] {
            remap[i] = kept.len();
            kept.push(*p);
        }
    }
    let tris = tris
        .into_iter()
        .map(|t| [remap[t[0]], remap[t[1]], remap[t[2]]])
        .collect();
    Ok((kept, tris))
}

fn max_area(h: f64) -> f64 {
    3f64.sqrt() / 4.0 * h * h
}

/// Structured tile of `2n²` right triangles.
pub(crate) fn free_template(n: usize) -> Template {
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut nodes = Vec::with_capacity((n + 1) * (n + 1));
    let mut lattice = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            nodes.push([lattice_coord(i as i64, n), lattice_coord(j as i64, n)]);
            let on_side = i == 0 || j == 0 || i == n || j == n;
            lattice.push(on_side.then_some((i as i64, j as i64)));
        }
    }
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            triangles.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            triangles.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    Template {
        n,
        nodes,
        lattice,
        triangles,
        pore_edges: Vec::new(),
    }
}

/// Unit cell minus the inclusion. Square-symmetric inclusions are meshed on
/// one eighth of the cell and reflected, so the template inherits the full
/// symmetry of the geometry.
pub(crate) fn pore_template(inc: &InclusionSpec, h: f64) -> Result<Template> {
    inc.validate()?;
    if !(h.is_finite() && h > 0.0 && h <= 0.5) {
        return Err(Error::Config(format!("mesh size must lie in (0, 0.5], got {h}")));
    }
    let n = side_divisions(h);
    let (nodes, triangles) = if inc.is_square_symmetric() {
        octant_mesh(inc, h, n)?
    } else {
        whole_cell_mesh(inc, h, n)?
    };
    finish_template(n, nodes, triangles)
}

fn whole_cell_mesh(
    inc: &InclusionSpec,
    h: f64,
    n: usize,
) -> Result<(Vec<[f64; 2]>, Vec<[usize; 3]>)> {
    let mut pts = Vec::new();
    // Square boundary, counter-clockwise from the origin.
    for k in 0..n {
        pts.push([lattice_coord(k as i64, n), 0.0]);
    }
    for k in 0..n {
        pts.push([1.0, lattice_coord(k as i64, n)]);
    }
    for k in (1..=n).rev() {
        pts.push([lattice_coord(k as i64, n), 1.0]);
    }
    for k in (1..=n).rev() {
        pts.push([0.0, lattice_coord(k as i64, n)]);
    }
    let outer = pts.len();
    let m = inc.segments_for(0.0, 2.0 * std::f64::consts::PI, 0.5 * h).max(8);
    let angles = inc.equal_arc_angles(0.0, 2.0 * std::f64::consts::PI, m);
    for &th in &angles[..m] {
        pts.push(inc.point_at(th));
    }
    let mut cons = Vec::new();
    for i in 0..outer {
        cons.push([i, (i + 1) % outer]);
    }
    for i in 0..m {
        cons.push([outer + i, outer + (i + 1) % m]);
    }
    refine_cdt(&pts, cons, max_area(h), |c| !inc.contains(c))
}

fn octant_mesh(inc: &InclusionSpec, h: f64, n: usize) -> Result<(Vec<[f64; 2]>, Vec<[usize; 3]>)> {
    // Local coordinates (s, t) centred on the cell; the octant is
    // 0 ≤ t ≤ s ≤ 1/2 outside the inclusion.
    let half = n / 2;
    let r0 = inc.radius_at(0.0);
    let rd = inc.radius_at(FRAC_PI_4);
    let d = rd * FRAC_PI_4.cos();
    let mut pts: Vec<[f64; 2]> = Vec::new();

    // t = 0 from the inclusion out to the cell side.
    let k_ab = ((0.5 - r0) / h).ceil().max(1.0) as usize;
    for k in 0..k_ab {
        pts.push([r0 + (0.5 - r0) * k as f64 / k_ab as f64, 0.0]);
    }
    // The cell side s = 1/2 on the lattice.
    for k in 0..half {
        pts.push([0.5, lattice_coord((half + k) as i64, n) - 0.5]);
    }
    // Diagonal from the corner back to the inclusion.
    let len = (0.5 - d) * 2f64.sqrt();
    let k_cd = (len / h).ceil().max(1.0) as usize;
    for k in 0..k_cd {
        let a = 0.5 - (0.5 - d) * k as f64 / k_cd as f64;
        pts.push([a, a]);
    }
    // Arc from π/4 down to 0, spacing ≤ h/2.
    let m8 = inc.segments_for(0.0, FRAC_PI_4, 0.5 * h);
    let angles = inc.equal_arc_angles(0.0, FRAC_PI_4, m8);
    for k in (1..=m8).rev() {
        let th = angles[k];
        let r = inc.radius_at(th);
        if k == m8 {
            pts.push([d, d]);
        } else {
            pts.push([r * th.cos(), r * th.sin()]);
        }
    }
    let count = pts.len();
    let cons: Vec<[usize; 2]> = (0..count).map(|i| [i, (i + 1) % count]).collect();
    let centred = |p: [f64; 2]| [p[0] + 0.5, p[1] + 0.5];
    let (onodes, otris) = refine_cdt(&pts, cons, max_area(h), |c| {
        c[1] > 0.0 && c[1] < c[0] && c[0] < 0.5 && !inc.contains(centred(c))
    })?;

    // Reflect through the eight symmetries of the square.
    let maps: [fn([f64; 2]) -> [f64; 2]; 8] = [
        |p| [p[0], p[1]],
        |p| [p[1], p[0]],
        |p| [-p[1], p[0]],
        |p| [-p[0], p[1]],
        |p| [-p[0], -p[1]],
        |p| [-p[1], -p[0]],
        |p| [p[1], -p[0]],
        |p| [p[0], -p[1]],
    ];
    let mut index: HashMap<(u64, u64), usize> = HashMap::new();
    let mut nodes = Vec::new();
    let mut tris = Vec::new();
    for map in maps {
        let ids: Vec<usize> = onodes
            .iter()
            .map(|&p| {
                let q = map(p);
                let q = [q[0] + 0.0, q[1] + 0.0];
                *index.entry((q[0].to_bits(), q[1].to_bits())).or_insert_with(|| {
                    nodes.push(q);
                    nodes.len() - 1
                })
            })
            .collect();
        for t in &otris {
            tris.push([ids[t[0]], ids[t[1]], ids[t[2]]]);
        }
    }
    let nodes = nodes.into_iter().map(centred).collect();
    Ok((nodes, tris))
}

fn finish_template(
    n: usize,
    mut nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
) -> Result<Template> {
    let mut lattice = vec![None; nodes.len()];
    for (i, p) in nodes.iter_mut().enumerate() {
        let on = |v: f64| v.abs() < 1e-12 || (v - 1.0).abs() < 1e-12;
        if !(on(p[0]) || on(p[1])) {
            continue;
        }
        let mut key = [0i64; 2];
        for d in 0..2 {
            let s = p[d] * n as f64;
            let k = s.round();
            if (s - k).abs() > 1e-8 {
                return Err(Error::Geometry(format!(
                    "cell-side node at {:?} is off the lattice",
                    p
                )));
            }
            key[d] = k as i64;
            p[d] = lattice_coord(key[d], n);
        }
        lattice[i] = Some((key[0], key[1]));
    }
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for t in &triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            *count.entry((a.min(b), a.max(b))).or_default() += 1;
        }
    }
    let mut pore_edges = Vec::new();
    for t in &triangles {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            if count[&(a.min(b), a.max(b))] == 1 && (lattice[a].is_none() || lattice[b].is_none()) {
                pore_edges.push([a, b]);
            }
        }
    }
    let side_nodes = lattice.iter().filter(|l| l.is_some()).count();
    if side_nodes != 4 * n {
        return Err(Error::Geometry(format!(
            "template has {side_nodes} side nodes, expected {}",
            4 * n
        )));
    }
    Ok(Template {
        n,
        nodes,
        lattice,
        triangles,
        pore_edges,
    })
}
