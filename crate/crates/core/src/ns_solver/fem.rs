//! Continuous P2 (velocity) and P1 (pressure) spaces on a [`Mesh`].
//!
//! P2 nodes are numbered vertices first, then edge midpoints in edge-table
//! order. Local node `3 + k` of a triangle is the midpoint of the edge
//! opposite local vertex `k`.

use std::sync::OnceLock;

use crate::geometry::Point;
use crate::meshing::{BoundaryTag, EdgeTable, Mesh, PointLocator};

#[derive(Debug)]
pub struct P2Space {
    mesh: Mesh,
    edges: EdgeTable,
    node_tags: Vec<Option<BoundaryTag>>,
    locator: OnceLock<PointLocator>,
}

/// Constant per-triangle data: area and barycentric gradients.
#[derive(Clone, Copy, Debug)]
pub struct TriangleGeom {
    pub points: [Point; 3],
    pub area: f64,
    pub grad_lambda: [Point; 3],
}

impl TriangleGeom {
    pub fn new(points: [Point; 3]) -> Self {
        let [p0, p1, p2] = points;
        let twice = (p1 - p0).cross(p2 - p0);
        let g = |a: Point, b: Point| Point::new(a.y - b.y, b.x - a.x) * (1.0 / twice);
        TriangleGeom {
            points,
            area: 0.5 * twice,
            grad_lambda: [g(p1, p2), g(p2, p0), g(p0, p1)],
        }
    }

    pub fn point_at(&self, l: [f64; 3]) -> Point {
        self.points[0] * l[0] + self.points[1] * l[1] + self.points[2] * l[2]
    }
}

/// P2 basis values at barycentric coordinates `l`.
pub fn p2_values(l: [f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
        4.0 * l[0] * l[1],
    ]
}

/// P2 basis gradients at barycentric coordinates `l`.
pub fn p2_gradients(l: [f64; 3], g: &[Point; 3]) -> [Point; 6] {
    [
        g[0] * (4.0 * l[0] - 1.0),
        g[1] * (4.0 * l[1] - 1.0),
        g[2] * (4.0 * l[2] - 1.0),
        (g[1] * l[2] + g[2] * l[1]) * 4.0,
        (g[2] * l[0] + g[0] * l[2]) * 4.0,
        (g[0] * l[1] + g[1] * l[0]) * 4.0,
    ]
}

impl P2Space {
    pub fn new(mesh: Mesh) -> Self {
        let edges = mesh.edge_table();
        let nv = mesh.n_vertices();
        let mut node_tags = vec![None; nv + edges.edges.len()];
        let rank = |t: BoundaryTag| match t {
            BoundaryTag::Obstacle => 3,
            BoundaryTag::Wall => 2,
            BoundaryTag::Gamma => 1,
        };
        let mut edge_of = std::collections::HashMap::with_capacity(edges.edges.len());
        for (i, e) in edges.edges.iter().enumerate() {
            edge_of.insert((e[0], e[1]), i);
        }
        let mut set = |n: usize, tag: BoundaryTag| {
            let slot: &mut Option<BoundaryTag> = &mut node_tags[n];
            if slot.is_none_or(|old| rank(tag) > rank(old)) {
                *slot = Some(tag);
            }
        };
        for be in &mesh.boundary_edges {
            let (a, b) = (be.v[0], be.v[1]);
            set(a, be.tag);
            set(b, be.tag);
            let e = edge_of[&(a.min(b), a.max(b))];
            set(nv + e, be.tag);
        }
        P2Space {
            mesh,
            edges,
            node_tags,
            locator: OnceLock::new(),
        }
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn edge_table(&self) -> &EdgeTable {
        &self.edges
    }

    pub fn n_vertices(&self) -> usize {
        self.mesh.n_vertices()
    }

    pub fn n_nodes(&self) -> usize {
        self.node_tags.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.mesh.n_triangles()
    }

    pub fn triangle_nodes(&self, t: usize) -> [usize; 6] {
        let [a, b, c] = self.mesh.triangles[t];
        let e = self.edges.triangle_edges[t];
        let nv = self.n_vertices();
        [a, b, c, nv + e[0], nv + e[1], nv + e[2]]
    }

    pub fn geom(&self, t: usize) -> TriangleGeom {
        TriangleGeom::new(self.mesh.triangle_points(t))
    }

    pub fn node_point(&self, n: usize) -> Point {
        let nv = self.n_vertices();
        if n < nv {
            self.mesh.vertices[n]
        } else {
            let [a, b] = self.edges.edges[n - nv];
            (self.mesh.vertices[a] + self.mesh.vertices[b]) * 0.5
        }
    }

    /// Boundary tag of a node; vertices shared by differently tagged edges
    /// take the no-slip tag (OBSTACLE over WALL over GAMMA).
    pub fn node_tag(&self, n: usize) -> Option<BoundaryTag> {
        self.node_tags[n]
    }

    pub fn is_boundary(&self, n: usize) -> bool {
        self.node_tags[n].is_some()
    }

    /// Midpoint nodes of all boundary edges, in `mesh.boundary_edges` order.
    pub fn boundary_midpoints(&self) -> Vec<usize> {
        let mut index = std::collections::HashMap::with_capacity(self.edges.edges.len());
        for (i, e) in self.edges.edges.iter().enumerate() {
            index.insert((e[0], e[1]), i);
        }
        self.mesh
            .boundary_edges
            .iter()
            .map(|be| {
                let (a, b) = (be.v[0], be.v[1]);
                self.n_vertices() + index[&(a.min(b), a.max(b))]
            })
            .collect()
    }

    pub fn locator(&self) -> &PointLocator {
        self.locator.get_or_init(|| PointLocator::new(&self.mesh))
    }

    /// Whether two spaces share connectivity and boundary tags, so that
    /// sparse patterns carry over.
    pub fn same_topology(&self, other: &P2Space) -> bool {
        self.mesh.triangles == other.mesh.triangles
            && self.mesh.boundary_edges == other.mesh.boundary_edges
    }

    /// Copy with moved vertex coordinates and identical connectivity.
    pub fn with_vertices(&self, vertices: Vec<Point>) -> P2Space {
        assert_eq!(vertices.len(), self.n_vertices());
        let mesh = Mesh {
            vertices,
            triangles: self.mesh.triangles.clone(),
            boundary_edges: self.mesh.boundary_edges.clone(),
            h_target: self.mesh.h_target,
        };
        P2Space {
            mesh,
            edges: self.edges.clone(),
            node_tags: self.node_tags.clone(),
            locator: OnceLock::new(),
        }
    }
}
