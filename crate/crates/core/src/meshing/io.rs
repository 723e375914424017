//! Plain-text mesh files.
//!
//! ```text
//! # h_target 5.0000000000000000e-2
//! NV NT NBE
//! x y            (NV lines)
//! i j k          (NT lines)
//! i j TAG        (NBE lines)
//! ```
//!
//! Coordinates are written with 17 significant digits so a round trip is
//! bit-exact. Lines starting with `#` are comments; the optional `h_target`
//! comment restores the requested mesh size.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use super::{BoundaryEdge, Mesh, MeshError};
use crate::geometry::Point;

pub fn write_mesh<W: Write>(mesh: &Mesh, mut out: W) -> Result<(), MeshError> {
    let mut s = String::new();
    writeln!(s, "# h_target {:.16e}", mesh.h_target).unwrap();
    writeln!(s, "{} {} {}", mesh.n_vertices(), mesh.n_triangles(), mesh.boundary_edges.len()).unwrap();
    for p in &mesh.vertices {
        writeln!(s, "{:.16e} {:.16e}", p.x, p.y).unwrap();
    }
    for t in &mesh.triangles {
        writeln!(s, "{} {} {}", t[0], t[1], t[2]).unwrap();
    }
    for e in &mesh.boundary_edges {
        writeln!(s, "{} {} {}", e.v[0], e.v[1], e.tag).unwrap();
    }
    out.write_all(s.as_bytes())?;
    Ok(())
}

pub fn read_mesh<R: BufRead>(input: R) -> Result<Mesh, MeshError> {
    let mut h_target = f64::NAN;
    let mut lines = Vec::new();
    for line in input.lines() {
        let line = line?;
        let trimmed = line.trim();
        if let Some(comment) = trimmed.strip_prefix('#') {
            let mut it = comment.split_whitespace();
            if it.next() == Some("h_target") {
                if let Some(v) = it.next() {
                    h_target = parse(v)?;
                }
            }
            continue;
        }
        if !trimmed.is_empty() {
            lines.push(trimmed.to_string());
        }
    }
    let header = lines.first().ok_or_else(|| MeshError::Format("empty file".into()))?;
    let counts: Vec<usize> = header
        .split_whitespace()
        .map(|s| s.parse().map_err(|_| MeshError::Format(format!("bad header `{header}`"))))
        .collect::<Result<_, _>>()?;
    let [nv, nt, nbe] = counts[..] else {
        return Err(MeshError::Format(format!("header must be `NV NT NBE`, got `{header}`")));
    };
    if lines.len() != 1 + nv + nt + nbe {
        return Err(MeshError::Format(format!(
            "expected {} data lines, found {}",
            nv + nt + nbe,
            lines.len() - 1
        )));
    }
    let fields = |line: &str, n: usize| -> Result<Vec<String>, MeshError> {
        let f: Vec<String> = line.split_whitespace().map(str::to_string).collect();
        if f.len() != n {
            return Err(MeshError::Format(format!("expected {n} fields in `{line}`")));
        }
        Ok(f)
    };
    let index = |s: &str| s.parse::<usize>().map_err(|_| MeshError::Format(format!("bad index `{s}`")));
    let mut vertices = Vec::with_capacity(nv);
    for line in &lines[1..1 + nv] {
        let f = fields(line, 2)?;
        vertices.push(Point::new(parse(&f[0])?, parse(&f[1])?));
    }
    let mut triangles = Vec::with_capacity(nt);
    for line in &lines[1 + nv..1 + nv + nt] {
        let f = fields(line, 3)?;
        triangles.push([index(&f[0])?, index(&f[1])?, index(&f[2])?]);
    }
    let mut boundary_edges = Vec::with_capacity(nbe);
    for line in &lines[1 + nv + nt..] {
        let f = fields(line, 3)?;
        boundary_edges.push(BoundaryEdge {
            v: [index(&f[0])?, index(&f[1])?],
            tag: f[2].parse()?,
        });
    }
    let out_of_range = triangles.iter().flatten().chain(boundary_edges.iter().flat_map(|e| e.v.iter()));
    if out_of_range.clone().any(|&i| i >= nv) {
        return Err(MeshError::Format("vertex index out of range".into()));
    }
    Ok(Mesh {
        vertices,
        triangles,
        boundary_edges,
        h_target,
    })
}

fn parse(s: &str) -> Result<f64, MeshError> {
    s.parse().map_err(|_| MeshError::Format(format!("bad number `{s}`")))
}
