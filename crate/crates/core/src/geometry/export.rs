//! Plain-text mesh format.
//!
//! ```text
//! curvslip-mesh 1
//! nodes <N>
//! <x> <y>                              N lines, node i on line i
//! triangles <T>
//! <a> <b> <c> <region> <ti> <tj>       tile is `- -` in the graded region
//! boundary_edges <E>
//! <a> <b> <tag>
//! periodic_pairs <P>
//! <slave> <master> <axis>
//! periods <px|-> <py|->
//! cell_size <h>
//! ```
//!
//! Nodal fields are written by `fem::write_field` with a header naming
//! this file.

use super::mesh::{BoundaryEdge, BoundaryTag, PeriodicMesh, PeriodicPair, Region};
use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

const MAGIC: &str = "curvslip-mesh 1";

pub fn write_mesh(mesh: &PeriodicMesh, path: &Path) -> Result<()> {
    std::fs::write(path, mesh_to_string(mesh))?;
    Ok(())
}

pub(crate) fn mesh_to_string(mesh: &PeriodicMesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC}");
    let _ = writeln!(s, "nodes {}", mesh.nodes.len());
    for p in &mesh.nodes {
        let _ = writeln!(s, "{} {}", p[0], p[1]);
    }
    let _ = writeln!(s, "triangles {}", mesh.triangles.len());
    for (t, tri) in mesh.triangles.iter().enumerate() {
        let tile = match mesh.tiles[t] {
            Some([i, j]) => format!("{i} {j}"),
            None => "- -".to_string(),
        };
        let _ = writeln!(
            s,
            "{} {} {} {} {}",
            tri[0],
            tri[1],
            tri[2],
            mesh.regions[t].name(),
            tile
        );
    }
    let _ = writeln!(s, "boundary_edges {}", mesh.boundary_edges.len());
    for e in &mesh.boundary_edges {
        let _ = writeln!(s, "{} {} {}", e.nodes[0], e.nodes[1], e.tag.name());
    }
    let _ = writeln!(s, "periodic_pairs {}", mesh.periodic_pairs.len());
    for p in &mesh.periodic_pairs {
        let _ = writeln!(s, "{} {} {}", p.slave, p.master, p.axis);
    }
    let per = |p: Option<f64>| p.map_or("-".to_string(), |v| v.to_string());
    let _ = writeln!(s, "periods {} {}", per(mesh.periods[0]), per(mesh.periods[1]));
    let _ = writeln!(s, "cell_size {}", mesh.cell_size);
    s
}

fn perr(message: impl Into<String>) -> Error {
    Error::Parse {
        what: "mesh file".into(),
        message: message.into(),
    }
}

struct Lines<'a> {
    it: std::str::Lines<'a>,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<Vec<&'a str>> {
        self.it
            .next()
            .map(|l| l.split_whitespace().collect())
            .ok_or_else(|| perr("unexpected end of file"))
    }

    fn section(&mut self, name: &str) -> Result<usize> {
        let f = self.next()?;
        if f.len() != 2 || f[0] != name {
            return Err(perr(format!("expected section `{name}`")));
        }
        f[1].parse().map_err(|_| perr(format!("bad count for `{name}`")))
    }
}

fn num<T: std::str::FromStr>(s: &str) -> Result<T> {
    s.parse().map_err(|_| perr(format!("bad number `{s}`")))
}

fn tag(s: &str) -> Result<BoundaryTag> {
    Ok(match s {
        "pore" => BoundaryTag::Pore,
        "top" => BoundaryTag::Top,
        "bottom" => BoundaryTag::Bottom,
        "interface_S" => BoundaryTag::Interface,
        "periodic_left" => BoundaryTag::PeriodicLeft,
        "periodic_right" => BoundaryTag::PeriodicRight,
        _ => return Err(perr(format!("unknown tag `{s}`"))),
    })
}

pub fn read_mesh(path: &Path) -> Result<PeriodicMesh> {
    let text = std::fs::read_to_string(path)?;
    parse_mesh(&text)
}

pub(crate) fn parse_mesh(text: &str) -> Result<PeriodicMesh> {
    let mut l = Lines { it: text.lines() };
    if l.it.next() != Some(MAGIC) {
        return Err(perr("missing header"));
    }
    let n = l.section("nodes")?;
    let mut nodes = Vec::with_capacity(n);
    for _ in 0..n {
        let f = l.next()?;
        if f.len() != 2 {
            return Err(perr("node line needs 2 fields"));
        }
        nodes.push([num(f[0])?, num(f[1])?]);
    }
    let t = l.section("triangles")?;
    let mut triangles = Vec::with_capacity(t);
    let mut regions = Vec::with_capacity(t);
    let mut tiles = Vec::with_capacity(t);
    for _ in 0..t {
        let f = l.next()?;
        if f.len() != 6 {
            return Err(perr("triangle line needs 6 fields"));
        }
        let tri: [usize; 3] = [num(f[0])?, num(f[1])?, num(f[2])?];
        if tri.iter().any(|&v| v >= n) {
            return Err(perr("triangle references a missing node"));
        }
        triangles.push(tri);
        regions.push(match f[3] {
            "above_S" => Region::AboveS,
            "below_S" => Region::BelowS,
            r => return Err(perr(format!("unknown region `{r}`"))),
        });
        tiles.push(if f[4] == "-" {
            None
        } else {
            Some([num(f[4])?, num(f[5])?])
        });
    }
    let e = l.section("boundary_edges")?;
    let mut edges = Vec::with_capacity(e);
    for _ in 0..e {
        let f = l.next()?;
        if f.len() != 3 {
            return Err(perr("edge line needs 3 fields"));
        }
        edges.push(BoundaryEdge {
            nodes: [num(f[0])?, num(f[1])?],
            tag: tag(f[2])?,
        });
    }
    let p = l.section("periodic_pairs")?;
    let mut pairs = Vec::with_capacity(p);
    for _ in 0..p {
        let f = l.next()?;
        if f.len() != 3 {
            return Err(perr("pair line needs 3 fields"));
        }
        pairs.push(PeriodicPair {
            slave: num(f[0])?,
            master: num(f[1])?,
            axis: num(f[2])?,
        });
    }
    let f = l.next()?;
    if f.len() != 3 || f[0] != "periods" {
        return Err(perr("expected `periods`"));
    }
    let per = |s: &str| -> Result<Option<f64>> {
        if s == "-" {
            Ok(None)
        } else {
            num(s).map(Some)
        }
    };
    let periods = [per(f[1])?, per(f[2])?];
    let f = l.next()?;
    if f.len() != 2 || f[0] != "cell_size" {
        return Err(perr("expected `cell_size`"));
    }
    let cell = num(f[1])?;
    Ok(PeriodicMesh::assemble(
        nodes, triangles, regions, tiles, edges, pairs, periods, cell,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_strip_mesh, InclusionSpec};

    #[test]
    fn round_trip_is_lossless() {
        let m = build_strip_mesh(&InclusionSpec::centered_circle(0.25), 2, 1, 0.25).unwrap();
        let text = mesh_to_string(&m);
        let back = parse_mesh(&text).unwrap();
        assert_eq!(back.nodes, m.nodes);
        assert_eq!(back.triangles, m.triangles);
        assert_eq!(back.boundary_edges, m.boundary_edges);
        assert_eq!(back.periodic_pairs, m.periodic_pairs);
        assert_eq!(back.tiles, m.tiles);
        assert_eq!(mesh_to_string(&back), text);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_mesh("hello").is_err());
        assert!(parse_mesh("curvslip-mesh 1\nnodes 1\n0 0\ntriangles 1\n0 1 2 above_S - -\n").is_err());
    }
}
