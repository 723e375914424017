//! Coefficients of the linear system satisfied by the difference of two
//! flows, `w = u₁ − u₂`, `q = p₁ − p₂`:
//!
//! `−μΔw + (u₂·∇)w + (w·∇)u₁ + ∇q = 0`, `div w = 0`,
//!
//! written with `A = −u₂` and `B_ij = ∂(u₁)_j/∂x_i`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::ball::same_mesh;
use super::ContinuationError;
use crate::geometry::Point;
use crate::ns_solver::{p2_gradients, p2_values, FlowField, Grad2, Vec2, HOLDER_SAMPLES};
use crate::quadrature::triangle7;

#[derive(Clone, Debug)]
pub struct LinearizedCoefficients {
    /// Quadrature points, seven per triangle.
    pub points: Vec<Point>,
    pub a: Vec<Vec2>,
    /// `b[k][i][j] = ∂(u₁)_j/∂x_i`.
    pub b: Vec<Grad2>,
    /// `sup|A| + ρ₀^α [A]_α`, the Hölder quotient sampled on random pairs.
    pub a_norm: f64,
    pub b_norm: f64,
}

/// Samples `A = −u₂` and `B = ∇u₁` at the quadrature points of the shared
/// mesh.
pub fn linearized_coefficients(
    u1: &FlowField,
    u2: &FlowField,
    rho0: f64,
    alpha: f64,
    seed: u64,
) -> Result<LinearizedCoefficients, ContinuationError> {
    if !same_mesh(&u1.space, &u2.space) {
        return Err(ContinuationError::MeshMismatch);
    }
    let space = &u1.space;
    let mut points = Vec::with_capacity(7 * space.n_triangles());
    let mut a = Vec::with_capacity(points.capacity());
    let mut b = Vec::with_capacity(points.capacity());
    for t in 0..space.n_triangles() {
        let geom = space.geom(t);
        for (l, _) in triangle7() {
            points.push(geom.point_at(*l));
            let v2 = u2.eval_in(t, &geom, *l);
            a.push([-v2.u[0], -v2.u[1]]);
            let g = u1.eval_in(t, &geom, *l).grad;
            b.push([[g[0][0], g[1][0]], [g[0][1], g[1][1]]]);
        }
    }
    let a_flat: Vec<Vec<f64>> = a.iter().map(|v| v.to_vec()).collect();
    let b_flat: Vec<Vec<f64>> = b.iter().map(|m| vec![m[0][0], m[0][1], m[1][0], m[1][1]]).collect();
    let a_norm = holder_surrogate(&points, &a_flat, rho0, alpha, seed);
    let b_norm = holder_surrogate(&points, &b_flat, rho0, alpha, seed);
    Ok(LinearizedCoefficients { points, a, b, a_norm, b_norm })
}

fn holder_surrogate(points: &[Point], values: &[Vec<f64>], rho0: f64, alpha: f64, seed: u64) -> f64 {
    let mag = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let sup = values.iter().map(|v| mag(v)).fold(0.0, f64::max);
    let n = points.len();
    let mut quotient = 0.0f64;
    if n > 1 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..HOLDER_SAMPLES {
            let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
            let r = points[i].distance(points[j]);
            if r > 0.0 {
                let d: Vec<f64> = values[i].iter().zip(&values[j]).map(|(x, y)| x - y).collect();
                quotient = quotient.max(mag(&d) / r.powf(alpha));
            }
        }
    }
    sup + rho0.powf(alpha) * quotient
}

/// Weak residuals over interior velocity test functions, relative to the
/// size of the individual momentum terms of both flows.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DifferenceResidual {
    /// Residual of the linear difference system.
    pub linearized: f64,
    /// Distance between that residual and the difference of the two
    /// Navier–Stokes momentum residuals.
    pub consistency: f64,
}

pub fn difference_residual(u1: &FlowField, u2: &FlowField) -> Result<DifferenceResidual, ContinuationError> {
    if !same_mesh(&u1.space, &u2.space) {
        return Err(ContinuationError::MeshMismatch);
    }
    if u1.mu != u2.mu {
        return Err(ContinuationError::Invalid(format!("viscosities {} and {}", u1.mu, u2.mu)));
    }
    let mu = u1.mu;
    let space = &u1.space;
    let n = space.n_nodes();
    let mut lin = vec![[0.0; 2]; n];
    let mut ns = vec![[0.0; 2]; n];
    // Viscous, convective and pressure parts of both flows, for the scale.
    let mut parts = vec![[[0.0; 2]; 6]; n];
    for t in 0..space.n_triangles() {
        let geom = space.geom(t);
        let nodes = space.triangle_nodes(t);
        for (l, w) in triangle7() {
            let w = w * geom.area;
            let phi = p2_values(*l);
            let dphi = p2_gradients(*l, &geom.grad_lambda);
            let v1 = u1.eval_in(t, &geom, *l);
            let v2 = u2.eval_in(t, &geom, *l);
            let wu = [v1.u[0] - v2.u[0], v1.u[1] - v2.u[1]];
            let wg: Grad2 = std::array::from_fn(|c| std::array::from_fn(|d| v1.grad[c][d] - v2.grad[c][d]));
            let q = v1.p - v2.p;
            for a in 0..6 {
                let dn = [dphi[a].x, dphi[a].y];
                let node = nodes[a];
                for c in 0..2 {
                    let visc = |g: &Grad2| mu * (g[c][0] * dn[0] + g[c][1] * dn[1]);
                    let conv = |u: &Vec2, g: &Grad2| (u[0] * g[c][0] + u[1] * g[c][1]) * phi[a];
                    lin[node][c] += w * (visc(&wg) + conv(&v2.u, &wg) + conv(&wu, &v1.grad) - q * dn[c]);
                    let r1 = visc(&v1.grad) + conv(&v1.u, &v1.grad) - v1.p * dn[c];
                    let r2 = visc(&v2.grad) + conv(&v2.u, &v2.grad) - v2.p * dn[c];
                    ns[node][c] += w * (r1 - r2);
                    let p = &mut parts[node];
                    p[0][c] += w * visc(&v1.grad);
                    p[1][c] += w * conv(&v1.u, &v1.grad);
                    p[2][c] += w * v1.p * dn[c];
                    p[3][c] += w * visc(&v2.grad);
                    p[4][c] += w * conv(&v2.u, &v2.grad);
                    p[5][c] += w * v2.p * dn[c];
                }
            }
        }
    }
    let interior: Vec<usize> = (0..n).filter(|&k| !space.is_boundary(k)).collect();
    let norm = |f: &dyn Fn(usize) -> Vec2| interior.iter().map(|&k| f(k)).map(|v| v[0] * v[0] + v[1] * v[1]).sum::<f64>().sqrt();
    let scale: f64 = (0..6).map(|j| norm(&|k| parts[k][j])).sum();
    let r_lin = norm(&|k| lin[k]);
    let r_diff = norm(&|k| [lin[k][0] - ns[k][0], lin[k][1] - ns[k][1]]);
    if scale == 0.0 {
        return Ok(DifferenceResidual { linearized: r_lin, consistency: r_diff });
    }
    Ok(DifferenceResidual { linearized: r_lin / scale, consistency: r_diff / scale })
}
