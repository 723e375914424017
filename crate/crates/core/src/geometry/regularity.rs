//! Sampled estimates of the constants (ρ₀, M₀) of a C^{2,α} boundary.
//!
//! At every boundary sample `P` the curve is written in the local frame
//! (tangent, inner normal) as a graph `x₂ = φ(x₁)`. The patch radius at `P`
//! is how far the tangential coordinate keeps increasing in both directions
//! before the curve turns back, cut down by any other part of the curve that
//! enters the ball. The graph norm uses the normalized C^{2,α} norm
//! `‖φ‖∞ + ρ‖φ'‖∞ + ρ²‖φ''‖∞ + ρ^{2+α}[φ'']_α` divided by `ρ`.

use std::f64::consts::TAU;

use super::point::Point;
use super::shape::{StarShape, DEFAULT_SAMPLES};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegularityEstimate {
    /// Largest patch radius admitting a graph representation everywhere.
    pub rho0_est: f64,
    /// Smallest M₀ with ‖φ‖_{C^{2,α}} ≤ M₀ ρ on patches of the requested
    /// radius; infinite when the requested radius exceeds `rho0_est`.
    pub m0_est: f64,
}

pub fn estimate_regularity_constants(shape: &StarShape, rho0: f64) -> RegularityEstimate {
    estimate_regularity_constants_with(shape, rho0, 0.5, DEFAULT_SAMPLES)
}

struct Frame {
    origin: Point,
    tangent: Point,
    inner: Point,
}

pub fn estimate_regularity_constants_with(
    shape: &StarShape,
    rho0: f64,
    alpha: f64,
    n: usize,
) -> RegularityEstimate {
    let thetas: Vec<f64> = (0..n).map(|i| TAU * i as f64 / n as f64).collect();
    let derivs: Vec<(Point, Point, Point)> =
        thetas.iter().map(|&t| shape.point_derivatives(t)).collect();
    let frames: Vec<Frame> = derivs
        .iter()
        .map(|(q, dq, _)| {
            let tangent = dq.normalized();
            Frame {
                origin: *q,
                tangent,
                inner: tangent.perp(),
            }
        })
        .collect();
    let cap = 2.0
        * derivs
            .iter()
            .map(|(q, _, _)| q.distance(shape.center()))
            .fold(0.0, f64::max);

    let mut rho0_est = f64::INFINITY;
    let mut m0_est = 0.0f64;
    for (i, frame) in frames.iter().enumerate() {
        let x_of = |j: usize| (derivs[j].0 - frame.origin).dot(frame.tangent);

        let mut fwd_steps = 0;
        let mut fwd = 0.0;
        while fwd_steps < n / 2 {
            let x = x_of((i + fwd_steps + 1) % n);
            if x <= fwd || fwd >= cap {
                break;
            }
            fwd = x;
            fwd_steps += 1;
        }
        let mut bwd_steps = 0;
        let mut bwd = 0.0;
        while bwd_steps < n / 2 {
            let x = -x_of((i + n - bwd_steps - 1) % n);
            if x <= bwd || bwd >= cap {
                break;
            }
            bwd = x;
            bwd_steps += 1;
        }
        let mut radius = fwd.min(bwd).min(cap);
        for k in 0..n {
            let offset = (k + n - i) % n;
            let on_arc = offset <= fwd_steps || n - offset <= bwd_steps;
            if !on_arc {
                radius = radius.min(derivs[k].0.distance(frame.origin));
            }
        }
        rho0_est = rho0_est.min(radius);

        if m0_est.is_finite() {
            if rho0 > radius {
                m0_est = f64::INFINITY;
                continue;
            }
            m0_est = m0_est.max(graph_norm(frame, &derivs, i, n, fwd_steps, bwd_steps, rho0, alpha) / rho0);
        }
    }
    RegularityEstimate { rho0_est, m0_est }
}

#[allow(clippy::too_many_arguments)]
fn graph_norm(
    frame: &Frame,
    derivs: &[(Point, Point, Point)],
    i: usize,
    n: usize,
    fwd_steps: usize,
    bwd_steps: usize,
    rho: f64,
    alpha: f64,
) -> f64 {
    // (x', φ, φ', φ'') along the arc inside the patch.
    let mut pts: Vec<(f64, f64, f64, f64)> = Vec::new();
    for off in -(bwd_steps as isize)..=(fwd_steps as isize) {
        let j = (i as isize + off).rem_euclid(n as isize) as usize;
        let (q, dq, d2q) = derivs[j];
        let d = q - frame.origin;
        let x = d.dot(frame.tangent);
        if x.abs() > rho {
            continue;
        }
        let y = d.dot(frame.inner);
        let (dx, dy) = (dq.dot(frame.tangent), dq.dot(frame.inner));
        let (d2x, d2y) = (d2q.dot(frame.tangent), d2q.dot(frame.inner));
        pts.push((x, y, dy / dx, (dx * d2y - dy * d2x) / (dx * dx * dx)));
    }
    let sup = |f: fn(&(f64, f64, f64, f64)) -> f64| pts.iter().map(f).fold(0.0, f64::max);
    let phi = sup(|p| p.1.abs());
    let dphi = sup(|p| p.2.abs());
    let d2phi = sup(|p| p.3.abs());
    let stride = (pts.len() / 64).max(1);
    let sub: Vec<&(f64, f64, f64, f64)> = pts.iter().step_by(stride).collect();
    let mut holder = 0.0f64;
    for (a, pa) in sub.iter().enumerate() {
        for pb in &sub[a + 1..] {
            let dx = (pa.0 - pb.0).abs();
            if dx > 0.0 {
                holder = holder.max((pa.3 - pb.3).abs() / dx.powf(alpha));
            }
        }
    }
    phi + rho * dphi + rho * rho * d2phi + rho.powf(2.0 + alpha) * holder
}
