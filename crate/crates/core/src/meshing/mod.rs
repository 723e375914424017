//! Conforming triangulations of the flow domain Ω∖D̄ with tagged boundaries.
//!
//! Triangles are stored counter-clockwise. Boundary edges are stored with the
//! domain on their left, so `(b − a)` rotated clockwise is the outward normal.
//! The outer loop comes first and starts at the first vertex of Γ.

mod generate;
mod io;
mod locate;
mod quality;

pub use generate::{generate_mesh, generate_mesh_with, rectangle_mesh, MeshOptions, RectangleTags};
pub use io::{read_mesh, write_mesh};
pub use locate::PointLocator;
pub use quality::{mesh_quality, triangle_angles, QualityReport, MIN_ANGLE_DEG};

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::geometry::{orient, Point};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    Gamma,
    Wall,
    Obstacle,
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryTag::Gamma => "GAMMA",
            BoundaryTag::Wall => "WALL",
            BoundaryTag::Obstacle => "OBSTACLE",
        })
    }
}

impl FromStr for BoundaryTag {
    type Err = MeshError;

    fn from_str(s: &str) -> Result<Self, MeshError> {
        match s {
            "GAMMA" => Ok(BoundaryTag::Gamma),
            "WALL" => Ok(BoundaryTag::Wall),
            "OBSTACLE" => Ok(BoundaryTag::Obstacle),
            other => Err(MeshError::Format(format!("unknown boundary tag `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryEdge {
    pub v: [usize; 2],
    pub tag: BoundaryTag,
}

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh size h = {h} outside (0, rho0/4 = {limit}]")]
    SizeOutOfRange { h: f64, limit: f64 },
    #[error("obstacle clearance {clearance} too small for mesh size h = {h}")]
    ObstacleTooClose { clearance: f64, h: f64 },
    #[error("triangulation failed: {0}")]
    Triangulation(String),
    #[error("mesh quality target not met: {0}")]
    Quality(String),
    #[error("invalid mesh: {0}")]
    Invalid(String),
    #[error("malformed mesh file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Point>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary_edges: Vec<BoundaryEdge>,
    pub h_target: f64,
}

/// Unique undirected edges and the per-triangle edge indices.
///
/// Edge `k` of a triangle `[a, b, c]` is the one opposite vertex `k`, i.e.
/// `(b,c)`, `(c,a)`, `(a,b)`.
#[derive(Clone, Debug)]
pub struct EdgeTable {
    pub edges: Vec<[usize; 2]>,
    pub triangle_edges: Vec<[usize; 3]>,
    /// Triangles adjacent to each edge (second slot `None` on the boundary).
    pub edge_triangles: Vec<[Option<usize>; 2]>,
}

impl Mesh {
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * orient(a, b, c)
    }

    pub fn area(&self) -> f64 {
        (0..self.n_triangles()).map(|t| self.triangle_area(t)).sum()
    }

    /// Edges numbered in order of first appearance over the triangles.
    pub fn edge_table(&self) -> EdgeTable {
        let mut index: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * self.n_triangles());
        let mut edges = Vec::new();
        let mut edge_triangles: Vec<[Option<usize>; 2]> = Vec::new();
        let mut triangle_edges = Vec::with_capacity(self.n_triangles());
        for (t, tri) in self.triangles.iter().enumerate() {
            let mut te = [0; 3];
            for k in 0..3 {
                let (a, b) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
                let key = (a.min(b), a.max(b));
                let e = *index.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                    edge_triangles.push([None, None]);
                    edges.len() - 1
                });
                let slot = &mut edge_triangles[e];
                if slot[0].is_none() {
                    slot[0] = Some(t);
                } else {
                    slot[1] = Some(t);
                }
                te[k] = e;
            }
            triangle_edges.push(te);
        }
        EdgeTable {
            edges,
            triangle_edges,
            edge_triangles,
        }
    }

    /// V − E + F.
    pub fn euler_characteristic(&self) -> i64 {
        let e = self.edge_table().edges.len();
        self.n_vertices() as i64 - e as i64 + self.n_triangles() as i64
    }

    /// Boundary edges grouped into closed loops, in stored order.
    pub fn boundary_loops(&self) -> Result<Vec<Vec<usize>>, MeshError> {
        let mut next: HashMap<usize, usize> = HashMap::new();
        for (i, e) in self.boundary_edges.iter().enumerate() {
            if next.insert(e.v[0], i).is_some() {
                return Err(MeshError::Invalid(format!("vertex {} starts two boundary edges", e.v[0])));
            }
        }
        let mut seen = vec![false; self.boundary_edges.len()];
        let mut loops = Vec::new();
        for start in 0..self.boundary_edges.len() {
            if seen[start] {
                continue;
            }
            let mut lp = Vec::new();
            let mut cur = start;
            loop {
                if seen[cur] {
                    return Err(MeshError::Invalid("boundary edges do not form closed loops".into()));
                }
                seen[cur] = true;
                lp.push(cur);
                let head = self.boundary_edges[cur].v[1];
                match next.get(&head) {
                    Some(&n) if n == start => break,
                    Some(&n) => cur = n,
                    None => {
                        return Err(MeshError::Invalid(format!("boundary loop open at vertex {head}")))
                    }
                }
            }
            loops.push(lp);
        }
        Ok(loops)
    }

    /// Number of connected components of the triangle adjacency graph.
    pub fn connected_components(&self) -> usize {
        let table = self.edge_table();
        let n = self.n_triangles();
        let mut comp = vec![usize::MAX; n];
        let mut count = 0;
        let mut stack = Vec::new();
        let mut tri_nbrs = vec![Vec::with_capacity(3); n];
        for et in &table.edge_triangles {
            if let [Some(a), Some(b)] = *et {
                tri_nbrs[a].push(b);
                tri_nbrs[b].push(a);
            }
        }
        for s in 0..n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = count;
            stack.push(s);
            while let Some(t) = stack.pop() {
                for &u in &tri_nbrs[t] {
                    if comp[u] == usize::MAX {
                        comp[u] = count;
                        stack.push(u);
                    }
                }
            }
            count += 1;
        }
        count
    }

    /// Structural checks: orientation, index range, boundary consistency
    /// and duplicate vertices.
    pub fn validate(&self, tol: f64) -> Result<(), MeshError> {
        let nv = self.n_vertices();
        for (t, tri) in self.triangles.iter().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(MeshError::Invalid(format!("triangle {t} has an out-of-range vertex")));
            }
            if self.triangle_area(t) <= 0.0 {
                return Err(MeshError::Invalid(format!("triangle {t} is not positively oriented")));
            }
        }
        let table = self.edge_table();
        let mut boundary: HashMap<(usize, usize), ()> = HashMap::new();
        for (e, et) in table.edges.iter().zip(&table.edge_triangles) {
            if et[1].is_none() {
                boundary.insert((e[0], e[1]), ());
            }
        }
        if boundary.len() != self.boundary_edges.len() {
            return Err(MeshError::Invalid(format!(
                "{} topological boundary edges but {} tagged",
                boundary.len(),
                self.boundary_edges.len()
            )));
        }
        for be in &self.boundary_edges {
            let key = (be.v[0].min(be.v[1]), be.v[0].max(be.v[1]));
            if !boundary.contains_key(&key) {
                return Err(MeshError::Invalid(format!("tagged edge {:?} is interior", be.v)));
            }
        }
        let mut order: Vec<usize> = (0..nv).collect();
        order.sort_by(|&a, &b| self.vertices[a].x.total_cmp(&self.vertices[b].x));
        for (i, &a) in order.iter().enumerate() {
            for &b in &order[i + 1..] {
                if self.vertices[b].x - self.vertices[a].x > tol {
                    break;
                }
                if self.vertices[a].distance(self.vertices[b]) <= tol {
                    return Err(MeshError::Invalid(format!("duplicate vertices {a} and {b}")));
                }
            }
        }
        Ok(())
    }

    /// Unit outward normal of a boundary edge.
    pub fn edge_outward_normal(&self, e: &BoundaryEdge) -> Point {
        let d = self.vertices[e.v[1]] - self.vertices[e.v[0]];
        Point::new(d.y, -d.x).normalized()
    }

    /// Boolean mask of the vertices on edges with the given tag.
    pub fn vertices_with_tag(&self, tag: BoundaryTag) -> Vec<bool> {
        let mut mask = vec![false; self.n_vertices()];
        for e in self.boundary_edges.iter().filter(|e| e.tag == tag) {
            mask[e.v[0]] = true;
            mask[e.v[1]] = true;
        }
        mask
    }
}
