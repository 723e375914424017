//! Integrals over `mesh ∩ B_r(c)`.
//!
//! Each triangle cut by the circle is clipped exactly: the intersection is a
//! convex region bounded by chords and circular arcs. Arcs are split into
//! pieces of at most π/8, the polygon through all corner and arc points is
//! fan-triangulated and integrated with the degree-5 rule, and every
//! circular segment between an arc piece and its chord is integrated in
//! polar coordinates with tensor Gauss rules.

use std::f64::consts::{FRAC_PI_8, TAU};
use std::sync::Arc;

use crate::geometry::{orient, segment_distance, DomainSpec, Point};
use crate::meshing::Mesh;
use crate::ns_solver::{grad_norm2, FlowField, Grad2, P2Space, TriangleGeom, Vec2};
use crate::quadrature::{gauss_legendre, triangle7};

use super::ContinuationError;

/// Relative quadrature error accepted by [`ball_integral`].
pub const BALL_QUADRATURE_TOL: f64 = 1e-4;

/// Distance from a point to the boundary of the flow region; negative
/// outside.
pub trait Clearance: Sync {
    fn clearance(&self, p: Point) -> f64;
}

impl Clearance for DomainSpec {
    fn clearance(&self, p: Point) -> f64 {
        let outer = -self.container.signed_distance(p);
        match &self.obstacle {
            Some(d) => outer.min(d.signed_distance(p)),
            None => outer,
        }
    }
}

impl Clearance for Mesh {
    /// Distance to the nearest boundary edge of the polygonal domain.
    fn clearance(&self, p: Point) -> f64 {
        let d = self
            .boundary_edges
            .iter()
            .map(|e| segment_distance(p, self.vertices[e.v[0]], self.vertices[e.v[1]]).0)
            .fold(f64::INFINITY, f64::min);
        let inside = (0..self.n_triangles()).any(|t| {
            let [a, b, c] = self.triangle_points(t);
            let s = orient(a, b, c).signum();
            orient(a, b, p) * s >= 0.0
                && orient(b, c, p) * s >= 0.0
                && orient(c, a, p) * s >= 0.0
        });
        if inside {
            d
        } else {
            -d
        }
    }
}

/// A velocity field that can be sampled inside the triangles of an
/// integration mesh.
pub trait BallField: Sync {
    fn space(&self) -> &P2Space;
    /// Velocity and gradient at `x`, which lies in triangle `t` with
    /// barycentric coordinates `l`.
    fn sample(&self, t: usize, geom: &TriangleGeom, l: [f64; 3], x: Point) -> (Vec2, Grad2);

    fn sample_at(&self, x: Point) -> (Vec2, Grad2) {
        let (t, l) = self.space().locator().locate_or_nearest(x);
        let geom = self.space().geom(t);
        self.sample(t, &geom, l, x)
    }
}

impl BallField for FlowField {
    fn space(&self) -> &P2Space {
        &self.space
    }

    fn sample(&self, t: usize, geom: &TriangleGeom, l: [f64; 3], _x: Point) -> (Vec2, Grad2) {
        let v = self.eval_in(t, geom, l);
        (v.u, v.grad)
    }
}

/// `a − b`, integrated on the mesh of `a`. When the meshes differ, `b` is
/// evaluated by point location.
#[derive(Clone, Copy, Debug)]
pub struct FieldDifference<'a> {
    pub a: &'a FlowField,
    pub b: &'a FlowField,
}

impl<'a> FieldDifference<'a> {
    pub fn new(a: &'a FlowField, b: &'a FlowField) -> Self {
        FieldDifference { a, b }
    }

    fn shared(&self) -> bool {
        same_mesh(&self.a.space, &self.b.space)
    }
}

pub(super) fn same_mesh(a: &Arc<P2Space>, b: &Arc<P2Space>) -> bool {
    Arc::ptr_eq(a, b) || (a.same_topology(b) && a.mesh().vertices == b.mesh().vertices)
}

impl BallField for FieldDifference<'_> {
    fn space(&self) -> &P2Space {
        &self.a.space
    }

    fn sample(&self, t: usize, geom: &TriangleGeom, l: [f64; 3], x: Point) -> (Vec2, Grad2) {
        let va = self.a.eval_in(t, geom, l);
        let vb = if self.shared() { self.b.eval_in(t, geom, l) } else { self.b.eval_at(x).1 };
        (
            [va.u[0] - vb.u[0], va.u[1] - vb.u[1]],
            [
                [va.grad[0][0] - vb.grad[0][0], va.grad[0][1] - vb.grad[0][1]],
                [va.grad[1][0] - vb.grad[1][0], va.grad[1][1] - vb.grad[1][1]],
            ],
        )
    }
}

/// Which squared quantity is integrated.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Integrand {
    /// `|u|²`
    Velocity,
    /// `|∇u|²` (Frobenius)
    Gradient,
}

impl Integrand {
    fn eval(self, u: &Vec2, g: &Grad2) -> f64 {
        match self {
            Integrand::Velocity => u[0] * u[0] + u[1] * u[1],
            Integrand::Gradient => grad_norm2(g),
        }
    }
}

/// Value at the base rule and the estimated relative quadrature error
/// (difference to the doubled rule).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BallIntegral {
    pub value: f64,
    pub relative_error: f64,
}

/// Checks that `B_r(center)` lies in the flow region.
pub fn check_ball(clearance: &dyn Clearance, center: Point, r: f64) -> Result<(), ContinuationError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(ContinuationError::Invalid(format!("ball radius {r}")));
    }
    let c = clearance.clearance(center);
    if c < r * (1.0 - 1e-9) {
        return Err(ContinuationError::BallOutsideDomain { center, radius: r, clearance: c });
    }
    Ok(())
}

/// `∫_{B_r(center)} |u|²` or `|∇u|²`.
pub fn ball_l2(
    field: &dyn BallField,
    clearance: &dyn Clearance,
    center: Point,
    r: f64,
    what: Integrand,
) -> Result<f64, ContinuationError> {
    check_ball(clearance, center, r)?;
    Ok(ball_quadrature(field, center, r, what, 1))
}

/// As [`ball_l2`], also reporting the relative change under the doubled
/// rule. Errors if that change exceeds [`BALL_QUADRATURE_TOL`].
pub fn ball_integral(
    field: &dyn BallField,
    clearance: &dyn Clearance,
    center: Point,
    r: f64,
    what: Integrand,
) -> Result<BallIntegral, ContinuationError> {
    check_ball(clearance, center, r)?;
    let value = ball_quadrature(field, center, r, what, 1);
    let fine = ball_quadrature(field, center, r, what, 2);
    let relative_error = if fine == 0.0 { (value - fine).abs() } else { (value - fine).abs() / fine.abs() };
    if relative_error > BALL_QUADRATURE_TOL {
        return Err(ContinuationError::Quadrature { relative_error });
    }
    Ok(BallIntegral { value, relative_error })
}

/// Clipped quadrature without the domain check. `level` 2 doubles the rule
/// order in every direction.
pub fn ball_quadrature(field: &dyn BallField, center: Point, r: f64, what: Integrand, level: usize) -> f64 {
    let mut total = 0.0;
    visit_ball(field, center, r, level, &mut |_, u, g, w| total += w * what.eval(u, g));
    total
}

/// Calls `visit(x, u, ∇u, weight)` for every quadrature point of
/// `mesh ∩ B_r(center)`.
pub fn visit_ball(
    field: &dyn BallField,
    center: Point,
    r: f64,
    level: usize,
    visit: &mut dyn FnMut(Point, &Vec2, &Grad2, f64),
) {
    let space = field.space();
    let mesh = space.mesh();
    let r2 = r * r;
    let (gx, gw) = gauss_legendre(8 * level);
    let (rx, rw) = gauss_legendre(4 * level);
    for t in 0..mesh.n_triangles() {
        let pts = mesh.triangle_points(t);
        let (lo, hi) = bbox(&pts);
        if lo.x > center.x + r || hi.x < center.x - r || lo.y > center.y + r || hi.y < center.y - r {
            continue;
        }
        let geom = space.geom(t);
        let mut emit = |x: Point, w: f64| {
            let l = barycentric(&geom, x);
            let (u, g) = field.sample(t, &geom, l, x);
            visit(x, &u, &g, w);
        };
        let inside = pts.map(|p| (p - center).norm_squared() < r2);
        if inside.iter().all(|&b| b) {
            triangle_rule(pts[0], pts[1], pts[2], level, &mut emit);
            continue;
        }
        let Some(region) = clip(&pts, center, r) else {
            continue;
        };
        let poly = &region.polygon;
        for k in 1..poly.len().saturating_sub(1) {
            triangle_rule(poly[0], poly[k], poly[k + 1], level, &mut emit);
        }
        for &(a0, a1) in &region.arcs {
            segment_rule(center, r, a0, a1, (&gx, &gw), (&rx, &rw), &mut emit);
        }
    }
}

fn bbox(pts: &[Point; 3]) -> (Point, Point) {
    let lo = Point::new(pts[0].x.min(pts[1].x).min(pts[2].x), pts[0].y.min(pts[1].y).min(pts[2].y));
    let hi = Point::new(pts[0].x.max(pts[1].x).max(pts[2].x), pts[0].y.max(pts[1].y).max(pts[2].y));
    (lo, hi)
}

fn barycentric(geom: &TriangleGeom, x: Point) -> [f64; 3] {
    let p0 = geom.points[0];
    let l1 = geom.grad_lambda[1].dot(x - p0);
    let l2 = geom.grad_lambda[2].dot(x - p0);
    [1.0 - l1 - l2, l1, l2]
}

fn triangle_rule(a: Point, b: Point, c: Point, level: usize, emit: &mut dyn FnMut(Point, f64)) {
    let area = 0.5 * orient(a, b, c).abs();
    if area == 0.0 {
        return;
    }
    if level <= 1 {
        for (l, w) in triangle7() {
            emit(a * l[0] + b * l[1] + c * l[2], w * area);
        }
    } else {
        let (ab, bc, ca) = (a.lerp(b, 0.5), b.lerp(c, 0.5), c.lerp(a, 0.5));
        for (p, q, s) in [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)] {
            triangle_rule(p, q, s, level - 1, emit);
        }
    }
}

/// Region between the arc `[a0, a1]` (angles, a1 > a0, a1 − a0 ≤ π/8) and
/// its chord.
fn segment_rule(
    c: Point,
    r: f64,
    a0: f64,
    a1: f64,
    (gx, gw): (&[f64], &[f64]),
    (rx, rw): (&[f64], &[f64]),
    emit: &mut dyn FnMut(Point, f64),
) {
    let half = 0.5 * (a1 - a0);
    let mid = a0 + half;
    let d = r * half.cos();
    let span = a1 - a0;
    for (&s, &ws) in gx.iter().zip(gw) {
        let phi = a0 + s * span;
        let dir = Point::new(phi.cos(), phi.sin());
        let inner = d / (phi - mid).cos();
        let len = r - inner;
        if len <= 0.0 {
            continue;
        }
        for (&q, &wq) in rx.iter().zip(rw) {
            let rho = inner + q * len;
            emit(c + dir * rho, ws * span * wq * len * rho);
        }
    }
}

struct Clipped {
    /// Convex polygon through edge pieces and arc split points (CCW).
    polygon: Vec<Point>,
    /// Arc pieces `(φ₀, φ₁)` whose chords are polygon edges.
    arcs: Vec<(f64, f64)>,
}

/// Triangle ∩ closed disk. Each edge meets the disk in one parameter
/// interval; consecutive pieces are joined by counterclockwise arcs.
fn clip(pts: &[Point; 3], c: Point, r: f64) -> Option<Clipped> {
    let mut p = *pts;
    if orient(p[0], p[1], p[2]) < 0.0 {
        p.swap(1, 2);
    }
    let mut pieces = Vec::with_capacity(3);
    for k in 0..3 {
        let (a, b) = (p[k], p[(k + 1) % 3]);
        // |a + t(b−a) − c|² = r²
        let d = b - a;
        let f = a - c;
        let qa = d.norm_squared();
        let qb = 2.0 * f.dot(d);
        let qc = f.norm_squared() - r * r;
        let disc = qb * qb - 4.0 * qa * qc;
        if qa == 0.0 || disc <= 0.0 {
            continue;
        }
        let sq = disc.sqrt();
        let t0 = ((-qb - sq) / (2.0 * qa)).max(0.0);
        let t1 = ((-qb + sq) / (2.0 * qa)).min(1.0);
        if t1 - t0 > 1e-14 {
            pieces.push((a + d * t0, a + d * t1));
        }
    }
    let angle = |x: Point| (x - c).y.atan2((x - c).x);
    let mut polygon = Vec::new();
    let mut arcs = Vec::new();
    if pieces.is_empty() {
        let o = |a: Point, b: Point| orient(a, b, c) >= 0.0;
        if o(p[0], p[1]) && o(p[1], p[2]) && o(p[2], p[0]) {
            push_arc(c, r, 0.0, TAU, &mut polygon, &mut arcs);
            return Some(Clipped { polygon, arcs });
        }
        return None;
    }
    let gap = 1e-12 * r;
    let n = pieces.len();
    for k in 0..n {
        let (a, b) = pieces[k];
        if polygon.last().is_none_or(|q: &Point| q.distance(a) > gap) {
            polygon.push(a);
        }
        polygon.push(b);
        let next = pieces[(k + 1) % n].0;
        if b.distance(next) > gap {
            let a0 = angle(b);
            let mut a1 = angle(next);
            while a1 <= a0 {
                a1 += TAU;
            }
            push_arc(c, r, a0, a1, &mut polygon, &mut arcs);
            // The arc end is the next piece's start.
            polygon.pop();
        }
    }
    Some(Clipped { polygon, arcs })
}

/// Appends the interior split points and the end point of the arc
/// `[a0, a1]`, together with its pieces.
fn push_arc(c: Point, r: f64, a0: f64, a1: f64, polygon: &mut Vec<Point>, arcs: &mut Vec<(f64, f64)>) {
    let pieces = ((a1 - a0) / FRAC_PI_8).ceil().max(1.0) as usize;
    let step = (a1 - a0) / pieces as f64;
    for k in 0..pieces {
        let (s0, s1) = (a0 + k as f64 * step, a0 + (k + 1) as f64 * step);
        arcs.push((s0, s1));
        polygon.push(c + Point::new(s1.cos(), s1.sin()) * r);
    }
}
