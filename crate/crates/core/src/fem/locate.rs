//! Bucket-grid point location on a triangulation.

use super::element::TriGeom;
use crate::geometry::PeriodicMesh;

pub struct Locator {
    origin: [f64; 2],
    cell: [f64; 2],
    dims: [usize; 2],
    buckets: Vec<Vec<usize>>,
    geoms: Vec<TriGeom>,
    periods: [Option<f64>; 2],
}

impl Locator {
    pub fn new(mesh: &PeriodicMesh) -> Self {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &mesh.nodes {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let nt = mesh.triangles.len().max(1);
        let side = ((nt as f64).sqrt() * 0.7).ceil().max(1.0);
        let ext = [(hi[0] - lo[0]).max(1e-12), (hi[1] - lo[1]).max(1e-12)];
        let aspect = ext[0] / ext[1];
        let nx = ((side * aspect.sqrt()).ceil() as usize).clamp(1, 4096);
        let ny = ((side / aspect.sqrt()).ceil() as usize).clamp(1, 4096);
        let cell = [ext[0] / nx as f64, ext[1] / ny as f64];
        let mut buckets = vec![Vec::new(); nx * ny];
        let geoms: Vec<TriGeom> = (0..mesh.triangles.len())
            .map(|t| TriGeom::new(mesh, t))
            .collect();
        for (t, g) in geoms.iter().enumerate() {
            let mut a = [f64::INFINITY; 2];
            let mut b = [f64::NEG_INFINITY; 2];
            for v in &g.vertices {
                for k in 0..2 {
                    a[k] = a[k].min(v[k]);
                    b[k] = b[k].max(v[k]);
                }
            }
            let i0 = (((a[0] - lo[0]) / cell[0]).floor() as isize).clamp(0, nx as isize - 1) as usize;
            let i1 = (((b[0] - lo[0]) / cell[0]).floor() as isize).clamp(0, nx as isize - 1) as usize;
            let j0 = (((a[1] - lo[1]) / cell[1]).floor() as isize).clamp(0, ny as isize - 1) as usize;
            let j1 = (((b[1] - lo[1]) / cell[1]).floor() as isize).clamp(0, ny as isize - 1) as usize;
            for j in j0..=j1 {
                for i in i0..=i1 {
                    buckets[j * nx + i].push(t);
                }
            }
        }
        Locator {
            origin: lo,
            cell,
            dims: [nx, ny],
            buckets,
            geoms,
            periods: mesh.periods,
        }
    }

    /// Triangle containing `p` and the barycentric coordinates of `p` in it.
    /// Periodic coordinates are reduced into the mesh range first. Points
    /// slightly outside the mesh (within `1e-9` relative barycentric slack)
    /// are accepted.
    pub fn locate(&self, p: [f64; 2]) -> Option<(usize, [f64; 3])> {
        let mut q = p;
        for k in 0..2 {
            if let Some(per) = self.periods[k] {
                q[k] = self.origin[k] + (q[k] - self.origin[k]).rem_euclid(per);
            }
        }
        let i = ((q[0] - self.origin[0]) / self.cell[0]).floor();
        let j = ((q[1] - self.origin[1]) / self.cell[1]).floor();
        let i = (i as isize).clamp(0, self.dims[0] as isize - 1) as usize;
        let j = (j as isize).clamp(0, self.dims[1] as isize - 1) as usize;
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        for &t in &self.buckets[j * self.dims[0] + i] {
            let l = self.geoms[t].barycentric(q);
            let m = l[0].min(l[1]).min(l[2]);
            if best.as_ref().is_none_or(|b| m > b.2) {
                best = Some((t, l, m));
            }
        }
        match best {
            Some((t, l, m)) if m > -1e-9 => Some((t, l)),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_box_mesh, BoundaryTag};

    #[test]
    fn locates_points_and_wraps_periodically() {
        let mesh = build_box_mesh(2.0, -1.0, 1.0, 7, 5, BoundaryTag::Bottom, BoundaryTag::Top).unwrap();
        let loc = Locator::new(&mesh);
        for &p in &[[0.3, 0.2], [1.99, -0.99], [0.0, 1.0], [2.3, 0.5]] {
            let (t, l) = loc.locate(p).unwrap();
            let g = TriGeom::new(&mesh, t);
            let x = g.point(l);
            let expect = [p[0].rem_euclid(2.0), p[1]];
            assert!((x[0] - expect[0]).abs() < 1e-12 && (x[1] - expect[1]).abs() < 1e-12);
        }
        assert!(loc.locate([0.5, 1.5]).is_none());
    }
}
