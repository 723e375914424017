use crate::geometry::{orient, Point, StarShape};
use crate::ns_solver::P2Space;

/// Moves the vertices of a mesh of `Ω ∖ D̄_from` onto a mesh of
/// `Ω ∖ D̄_to` with the same connectivity. A vertex at radial gap `s` from
/// `∂D_from` (polar angle `θ` about its center) moves by
/// `w(s/band)·(to(θ) − from(θ))`, `w(x) = 1 − 3x² + 2x³` on `[0, 1]` and
/// zero beyond, so obstacle vertices land on `∂D_to` and vertices farther
/// than `band` stay put. Returns `None` if a triangle inverts or
/// collapses below a tenth of its area.
pub fn morph_vertices(space: &P2Space, from: &StarShape, to: &StarShape, band: f64) -> Option<Vec<Point>> {
    if !(band > 0.0) {
        return None;
    }
    let mesh = space.mesh();
    let c = from.center();
    let moved: Vec<Point> = mesh
        .vertices
        .iter()
        .map(|&v| {
            let theta = from.polar_angle(v);
            let s = ((v - c).norm() - from.radius(theta)).max(0.0);
            let x = s / band;
            if x >= 1.0 {
                return v;
            }
            let w = 1.0 - x * x * (3.0 - 2.0 * x);
            v + (to.point(theta) - from.point(theta)) * w
        })
        .collect();
    let ok = mesh.triangles.iter().all(|t| {
        let before = orient(mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
        let after = orient(moved[t[0]], moved[t[1]], moved[t[2]]);
        after > 0.1 * before
    });
    ok.then_some(moved)
}
