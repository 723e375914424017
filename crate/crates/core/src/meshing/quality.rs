use super::Mesh;
use crate::geometry::Point;

/// Smallest interior angle accepted for generated meshes, in degrees.
pub const MIN_ANGLE_DEG: f64 = 20.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QualityReport {
    pub min_angle_deg: f64,
    /// Largest circumradius-to-twice-inradius ratio (1 for equilateral).
    pub max_aspect: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub n_vertices: usize,
    pub n_triangles: usize,
    pub n_boundary_edges: usize,
    /// Set when the minimum angle is below [`MIN_ANGLE_DEG`].
    pub flagged: bool,
}

/// Interior angles at the three corners, in radians.
pub fn triangle_angles(p: [Point; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for k in 0..3 {
        let u = p[(k + 1) % 3] - p[k];
        let v = p[(k + 2) % 3] - p[k];
        out[k] = u.cross(v).abs().atan2(u.dot(v));
    }
    out
}

pub fn mesh_quality(mesh: &Mesh) -> QualityReport {
    let mut min_angle = f64::INFINITY;
    let mut max_aspect = 0.0f64;
    let mut h_min = f64::INFINITY;
    let mut h_max = 0.0f64;
    for t in 0..mesh.n_triangles() {
        let p = mesh.triangle_points(t);
        for a in triangle_angles(p) {
            min_angle = min_angle.min(a);
        }
        let l = [p[1].distance(p[2]), p[2].distance(p[0]), p[0].distance(p[1])];
        for &e in &l {
            h_min = h_min.min(e);
            h_max = h_max.max(e);
        }
        let area = 0.5 * (p[1] - p[0]).cross(p[2] - p[0]).abs();
        let s = 0.5 * (l[0] + l[1] + l[2]);
        let inradius = area / s;
        let circumradius = l[0] * l[1] * l[2] / (4.0 * area);
        max_aspect = max_aspect.max(circumradius / (2.0 * inradius));
    }
    let min_angle_deg = min_angle.to_degrees();
    QualityReport {
        min_angle_deg,
        max_aspect,
        h_min,
        h_max,
        n_vertices: mesh.n_vertices(),
        n_triangles: mesh.n_triangles(),
        n_boundary_edges: mesh.boundary_edges.len(),
        flagged: min_angle_deg < MIN_ANGLE_DEG,
    }
}
