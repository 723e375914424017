use std::fmt;
use std::sync::Arc;

use super::fem::{p2_gradients, p2_values, P2Space, TriangleGeom};
use crate::geometry::Point;
use crate::meshing::BoundaryTag;
use crate::quadrature::triangle7;

pub type Vec2 = [f64; 2];
/// `g[c][d] = ∂u_c/∂x_d`.
pub type Grad2 = [[f64; 2]; 2];

/// Discrete velocity (P2, one value per node) and pressure (P1, one value
/// per vertex) on a shared space.
#[derive(Clone)]
pub struct FlowField {
    pub space: Arc<P2Space>,
    pub velocity: Vec<Vec2>,
    pub pressure: Vec<f64>,
    pub mu: f64,
    /// Multiplier of the zero-mean pressure constraint; equals the discrete
    /// boundary flux over the domain area.
    pub gauge_multiplier: f64,
}

impl fmt::Debug for FlowField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FlowField")
            .field("nodes", &self.velocity.len())
            .field("vertices", &self.pressure.len())
            .field("mu", &self.mu)
            .finish()
    }
}

/// Point values of a field inside one triangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointValue {
    pub u: Vec2,
    pub grad: Grad2,
    pub p: f64,
}

impl PointValue {
    /// Cauchy stress `μ(∇u + ∇uᵀ) − pI` applied to `n`.
    pub fn traction(&self, mu: f64, n: Point) -> Vec2 {
        let g = &self.grad;
        let s = [
            [2.0 * mu * g[0][0] - self.p, mu * (g[0][1] + g[1][0])],
            [mu * (g[0][1] + g[1][0]), 2.0 * mu * g[1][1] - self.p],
        ];
        [s[0][0] * n.x + s[0][1] * n.y, s[1][0] * n.x + s[1][1] * n.y]
    }
}

pub fn grad_norm2(g: &Grad2) -> f64 {
    g[0][0] * g[0][0] + g[0][1] * g[0][1] + g[1][0] * g[1][0] + g[1][1] * g[1][1]
}

impl FlowField {
    pub fn zeros(space: Arc<P2Space>, mu: f64) -> Self {
        FlowField {
            velocity: vec![[0.0; 2]; space.n_nodes()],
            pressure: vec![0.0; space.n_vertices()],
            space,
            mu,
            gauge_multiplier: 0.0,
        }
    }

    /// Interpolates analytic velocity and pressure at the nodes.
    pub fn interpolate(
        space: Arc<P2Space>,
        mu: f64,
        u: impl Fn(Point) -> Vec2,
        p: impl Fn(Point) -> f64,
    ) -> Self {
        let velocity = (0..space.n_nodes()).map(|n| u(space.node_point(n))).collect();
        let pressure = space.mesh().vertices.iter().map(|&x| p(x)).collect();
        FlowField {
            space,
            velocity,
            pressure,
            mu,
            gauge_multiplier: 0.0,
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        FlowField {
            space: self.space.clone(),
            velocity: self.velocity.iter().map(|v| [c * v[0], c * v[1]]).collect(),
            pressure: self.pressure.iter().map(|p| c * p).collect(),
            mu: self.mu,
            gauge_multiplier: c * self.gauge_multiplier,
        }
    }

    /// `self − other` on the same space.
    pub fn difference(&self, other: &FlowField) -> Self {
        assert!(Arc::ptr_eq(&self.space, &other.space) || self.space.same_topology(&other.space));
        FlowField {
            space: self.space.clone(),
            velocity: self
                .velocity
                .iter()
                .zip(&other.velocity)
                .map(|(a, b)| [a[0] - b[0], a[1] - b[1]])
                .collect(),
            pressure: self.pressure.iter().zip(&other.pressure).map(|(a, b)| a - b).collect(),
            mu: self.mu,
            gauge_multiplier: self.gauge_multiplier - other.gauge_multiplier,
        }
    }

    /// Values in triangle `t` at barycentric coordinates `l`.
    pub fn eval_in(&self, t: usize, geom: &TriangleGeom, l: [f64; 3]) -> PointValue {
        let nodes = self.space.triangle_nodes(t);
        let phi = p2_values(l);
        let dphi = p2_gradients(l, &geom.grad_lambda);
        let mut u = [0.0; 2];
        let mut grad = [[0.0; 2]; 2];
        for a in 0..6 {
            let v = self.velocity[nodes[a]];
            for c in 0..2 {
                u[c] += v[c] * phi[a];
                grad[c][0] += v[c] * dphi[a].x;
                grad[c][1] += v[c] * dphi[a].y;
            }
        }
        let p = (0..3).map(|k| self.pressure[nodes[k]] * l[k]).sum();
        PointValue { u, grad, p }
    }

    /// Values at an arbitrary point; points slightly outside the polygonal
    /// domain use the nearest triangle.
    pub fn eval_at(&self, x: Point) -> (usize, PointValue) {
        let (t, l) = self.space.locator().locate_or_nearest(x);
        (t, self.eval_in(t, &self.space.geom(t), l))
    }

    /// `∫ f(x, value)` over the mesh with the degree-5 rule.
    pub fn integrate(&self, f: impl Fn(Point, &PointValue) -> f64) -> f64 {
        self.integrate_where(|_| true, f)
    }

    pub fn integrate_where(&self, mask: impl Fn(usize) -> bool, f: impl Fn(Point, &PointValue) -> f64) -> f64 {
        let mut total = 0.0;
        for t in 0..self.space.n_triangles() {
            if !mask(t) {
                continue;
            }
            let geom = self.space.geom(t);
            let mut acc = 0.0;
            for (l, w) in triangle7() {
                let v = self.eval_in(t, &geom, *l);
                acc += w * f(geom.point_at(*l), &v);
            }
            total += acc * geom.area;
        }
        total
    }

    pub fn velocity_l2(&self) -> f64 {
        self.integrate(|_, v| v.u[0] * v.u[0] + v.u[1] * v.u[1]).sqrt()
    }

    pub fn grad_l2(&self) -> f64 {
        self.integrate(|_, v| grad_norm2(&v.grad)).sqrt()
    }

    /// `(‖u‖² + ‖∇u‖²)^{1/2}`.
    pub fn h1_norm(&self) -> f64 {
        self.integrate(|_, v| v.u[0] * v.u[0] + v.u[1] * v.u[1] + grad_norm2(&v.grad))
            .sqrt()
    }

    pub fn velocity_l2_error(&self, exact: impl Fn(Point) -> Vec2) -> f64 {
        self.integrate(|x, v| {
            let e = exact(x);
            (v.u[0] - e[0]).powi(2) + (v.u[1] - e[1]).powi(2)
        })
        .sqrt()
    }

    pub fn pressure_l2_error(&self, exact: impl Fn(Point) -> f64) -> f64 {
        self.integrate(|x, v| (v.p - exact(x)).powi(2)).sqrt()
    }

    pub fn pressure_mean(&self) -> f64 {
        self.integrate(|_, v| v.p) / self.space.mesh().area()
    }

    /// max_j |∫ φ_j div u| over P1 test functions, relative to
    /// max_j ∫ φ_j |∇u| (0 for a field with vanishing gradient).
    pub fn projected_divergence(&self) -> f64 {
        let nv = self.space.n_vertices();
        let mut div = vec![0.0; nv];
        let mut scale = vec![0.0; nv];
        for t in 0..self.space.n_triangles() {
            let geom = self.space.geom(t);
            let nodes = self.space.triangle_nodes(t);
            for (l, w) in triangle7() {
                let v = self.eval_in(t, &geom, *l);
                let d = v.grad[0][0] + v.grad[1][1];
                let g = grad_norm2(&v.grad).sqrt();
                for k in 0..3 {
                    div[nodes[k]] += w * geom.area * l[k] * d;
                    scale[nodes[k]] += w * geom.area * l[k] * g;
                }
            }
        }
        let s = scale.iter().fold(0.0f64, |a, &b| a.max(b));
        if s == 0.0 {
            return 0.0;
        }
        div.iter().fold(0.0f64, |a, &b| a.max(b.abs())) / s
    }

    /// Largest velocity magnitude at OBSTACLE nodes.
    pub fn obstacle_trace_max(&self) -> f64 {
        (0..self.space.n_nodes())
            .filter(|&n| self.space.node_tag(n) == Some(BoundaryTag::Obstacle))
            .map(|n| self.velocity[n][0].hypot(self.velocity[n][1]))
            .fold(0.0, f64::max)
    }

    /// Vertex gradients averaged over the adjacent triangles.
    pub fn vertex_gradients(&self) -> Vec<Grad2> {
        let nv = self.space.n_vertices();
        let mut acc = vec![[[0.0; 2]; 2]; nv];
        let mut count = vec![0usize; nv];
        for t in 0..self.space.n_triangles() {
            let geom = self.space.geom(t);
            let tri = self.space.mesh().triangles[t];
            for k in 0..3 {
                let mut l = [0.0; 3];
                l[k] = 1.0;
                let g = self.eval_in(t, &geom, l).grad;
                for c in 0..2 {
                    for d in 0..2 {
                        acc[tri[k]][c][d] += g[c][d];
                    }
                }
                count[tri[k]] += 1;
            }
        }
        for (g, &n) in acc.iter_mut().zip(&count) {
            if n > 0 {
                for row in g.iter_mut() {
                    for v in row.iter_mut() {
                        *v /= n as f64;
                    }
                }
            }
        }
        acc
    }
}
