//! Outward offsets of star-shaped obstacles (the regularized family `Dʰ`).
//!
//! Each boundary sample is pushed along its outward normal by `h` and the
//! resulting curve is re-expressed as a star-shaped Fourier radius about the
//! original center. The offset of a non-circular curve is not band-limited,
//! so the refit order grows until the fit residual is below
//! `fit_tolerance · h`.

use std::f64::consts::TAU;

use super::point::Point;
use super::shape::{StarShape, DEFAULT_SAMPLES};
use super::GeometryError;

#[derive(Clone, Copy, Debug)]
pub struct RegularizeOptions {
    /// Length scale ρ₀ bounding admissible offsets.
    pub rho0: f64,
    /// Offsets must satisfy `h ≤ max_fraction · ρ₀`.
    pub max_fraction: f64,
    pub samples: usize,
    /// Refit residual target, relative to `h`.
    pub fit_tolerance: f64,
    pub max_order: usize,
}

impl RegularizeOptions {
    pub fn new(rho0: f64) -> Self {
        RegularizeOptions {
            rho0,
            max_fraction: 0.1,
            samples: DEFAULT_SAMPLES,
            fit_tolerance: 1e-3,
            max_order: 96,
        }
    }
}

/// An offset shape with the measured constants of the construction.
#[derive(Clone, Debug)]
pub struct RegularizedShape {
    pub shape: StarShape,
    pub h: f64,
    /// min over new boundary samples of dist(x, ∂D) / h.
    pub gamma0: f64,
    /// max over new boundary samples of dist(x, ∂D) / h.
    pub gamma1: f64,
    /// meas(Dʰ \ D).
    pub area_growth: f64,
    /// Perimeter of the original boundary.
    pub base_perimeter: f64,
    /// Largest |ν(x) − ν(y)| between a new boundary point and its nearest
    /// point on the original boundary.
    pub normal_deviation: f64,
    /// Largest fit residual of the refit radius.
    pub fit_residual: f64,
}

pub fn regularize_obstacle(
    shape: &StarShape,
    h: f64,
    opts: &RegularizeOptions,
) -> Result<RegularizedShape, GeometryError> {
    let limit = opts.max_fraction * opts.rho0;
    if !(h >= 0.0 && h <= limit) {
        return Err(GeometryError::OffsetOutOfRange { h, limit });
    }
    let base_perimeter = shape.perimeter();
    if h == 0.0 {
        return Ok(RegularizedShape {
            shape: shape.clone(),
            h,
            gamma0: 1.0,
            gamma1: 1.0,
            area_growth: 0.0,
            base_perimeter,
            normal_deviation: 0.0,
            fit_residual: 0.0,
        });
    }

    let n = opts.samples;
    let samples = shape.samples(n);
    if let Some(s) = samples.iter().find(|s| 1.0 + h * s.curvature <= 0.0) {
        return Err(GeometryError::SelfIntersectingOffset { theta: s.theta });
    }
    let center = shape.center();
    let offset: Vec<Point> = samples.iter().map(|s| s.point + s.normal * h).collect();

    // Unwrapped polar angles must increase strictly, otherwise the offset is
    // not star-shaped about the center.
    let mut phis = Vec::with_capacity(n);
    let mut phi = (offset[0] - center).angle();
    phis.push(phi);
    for i in 1..n {
        let mut step = (offset[i] - center).angle() - (offset[i - 1] - center).angle();
        step = (step + std::f64::consts::PI).rem_euclid(TAU) - std::f64::consts::PI;
        if step <= 0.0 {
            return Err(GeometryError::SelfIntersectingOffset {
                theta: samples[i].theta,
            });
        }
        phi += step;
        phis.push(phi);
    }
    let radii: Vec<f64> = offset.iter().map(|p| p.distance(center)).collect();

    // Periodic linear interpolation onto the grid θⱼ = 2πj/n.
    let at_grid: Vec<f64> = (0..n)
        .map(|j| {
            let theta = TAU * j as f64 / n as f64;
            let target = phis[0] + (theta - phis[0]).rem_euclid(TAU);
            let idx = phis.partition_point(|&p| p <= target);
            let (p0, r0, p1, r1) = if idx >= n {
                (phis[n - 1], radii[n - 1], phis[0] + TAU, radii[0])
            } else {
                (phis[idx - 1], radii[idx - 1], phis[idx], radii[idx])
            };
            r0 + (r1 - r0) * (target - p0) / (p1 - p0)
        })
        .collect();

    let mut order = shape.order();
    let (fitted, fit_residual) = loop {
        let candidate = StarShape::fit_radii(center, &at_grid, order)?;
        let residual = at_grid
            .iter()
            .enumerate()
            .map(|(j, r)| (candidate.radius(TAU * j as f64 / n as f64) - r).abs())
            .fold(0.0, f64::max);
        if residual <= opts.fit_tolerance * h || order >= opts.max_order {
            break (candidate, residual);
        }
        order = (order * 2).max(order + 4).min(opts.max_order);
    };

    let mut gamma0 = f64::INFINITY;
    let mut gamma1 = 0.0f64;
    let mut normal_deviation = 0.0f64;
    for s in fitted.samples(n) {
        let d = shape.signed_distance(s.point);
        gamma0 = gamma0.min(d / h);
        gamma1 = gamma1.max(d.abs() / h);
        // Closest point on the original curve lies along -ν at distance d.
        let foot = s.point - s.normal * d;
        let theta = shape.polar_angle(foot);
        normal_deviation = normal_deviation.max((shape.outward_normal(theta) - s.normal).norm());
    }
    Ok(RegularizedShape {
        area_growth: fitted.area() - shape.area(),
        shape: fitted,
        h,
        gamma0,
        gamma1,
        base_perimeter,
        normal_deviation,
        fit_residual,
    })
}
