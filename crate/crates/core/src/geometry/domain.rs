use std::f64::consts::TAU;

use super::point::{wrap_angle, Point};
use super::shape::{StarShape, DEFAULT_SAMPLES};
use super::GeometryError;

/// Angular interval `[start, end]` on the container boundary, measured
/// counter-clockwise about the container center.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GammaArc {
    pub start: f64,
    pub end: f64,
}

impl GammaArc {
    pub fn new(start: f64, end: f64) -> Result<Self, GeometryError> {
        if !(start.is_finite() && end.is_finite()) || end <= start || end - start > TAU {
            return Err(GeometryError::InvalidArc { start, end });
        }
        Ok(GammaArc { start, end })
    }

    pub fn span(&self) -> f64 {
        self.end - self.start
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.start + self.end)
    }

    /// Angular offset of `theta` from the arc start, in `[0, 2π)`.
    pub fn offset_of(&self, theta: f64) -> f64 {
        wrap_angle(theta - self.start)
    }

    pub fn contains_angle(&self, theta: f64) -> bool {
        self.span() >= TAU || self.offset_of(theta) <= self.span()
    }

    /// Whether `theta` lies in the arc with a margin of `margin` radians on
    /// both ends.
    pub fn contains_strictly(&self, theta: f64, margin: f64) -> bool {
        let off = self.offset_of(theta);
        off >= margin && off <= self.span() - margin
    }
}

/// Container Ω, optional obstacle D, accessible arc Γ and the a priori
/// constants.
#[derive(Clone, Debug)]
pub struct DomainSpec {
    pub container: StarShape,
    pub obstacle: Option<StarShape>,
    pub gamma: GammaArc,
    pub rho0: f64,
    pub m0: f64,
    pub m1: f64,
}

impl DomainSpec {
    pub fn new(
        container: StarShape,
        obstacle: Option<StarShape>,
        gamma: GammaArc,
        rho0: f64,
        m0: f64,
        m1: f64,
    ) -> Result<Self, GeometryError> {
        let spec = DomainSpec {
            container,
            obstacle,
            gamma,
            rho0,
            m0,
            m1,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Same container, arc and constants with a different obstacle.
    pub fn with_obstacle(&self, obstacle: StarShape) -> Result<Self, GeometryError> {
        DomainSpec::new(
            self.container.clone(),
            Some(obstacle),
            self.gamma,
            self.rho0,
            self.m0,
            self.m1,
        )
    }

    /// Measure of Ω \ D̄.
    pub fn flow_area(&self) -> f64 {
        self.container.area() - self.obstacle.as_ref().map_or(0.0, StarShape::area)
    }

    /// Point of Γ at its angular midpoint.
    pub fn gamma_midpoint(&self) -> Point {
        self.container.point(self.gamma.midpoint())
    }

    /// dist(∂D, ∂Ω) over sampled obstacle points; `None` without obstacle.
    pub fn obstacle_clearance(&self) -> Option<f64> {
        self.obstacle.as_ref().map(|d| obstacle_clearance(&self.container, d))
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.rho0 > 0.0 && self.rho0.is_finite()) {
            return Err(GeometryError::InvalidScale { rho0: self.rho0 });
        }
        let tol = 1e-9 * self.rho0;
        for (which, shape) in std::iter::once(("container", &self.container))
            .chain(self.obstacle.iter().map(|d| ("obstacle", d)))
        {
            let radius = shape.min_curvature_radius(DEFAULT_SAMPLES);
            if radius < self.rho0 - tol {
                return Err(GeometryError::CurvatureRadius {
                    which,
                    radius,
                    rho0: self.rho0,
                });
            }
        }
        if let Some(obstacle) = &self.obstacle {
            if obstacle
                .boundary_points()
                .iter()
                .any(|p| !self.container.contains(*p))
            {
                return Err(GeometryError::ObstacleOutside);
            }
            let distance = obstacle_clearance(&self.container, obstacle);
            if distance < self.rho0 - tol {
                return Err(GeometryError::ObstacleTooClose {
                    distance,
                    rho0: self.rho0,
                });
            }
        }
        let area = self.flow_area();
        let bound = self.m1 * self.rho0 * self.rho0;
        if area > bound {
            return Err(GeometryError::AreaBound { area, bound });
        }
        let p0 = self.gamma_midpoint();
        let step = TAU / DEFAULT_SAMPLES as f64;
        let escapes = (0..DEFAULT_SAMPLES).any(|i| {
            let theta = step * i as f64;
            self.container.point(theta).distance(p0) < self.rho0
                && !self.gamma.contains_angle(theta)
        });
        if escapes {
            return Err(GeometryError::GammaPatch { rho0: self.rho0 });
        }
        Ok(())
    }
}

/// Minimum over obstacle boundary samples of the distance to the container
/// boundary.
pub fn obstacle_clearance(container: &StarShape, obstacle: &StarShape) -> f64 {
    obstacle
        .boundary_points()
        .iter()
        .map(|p| container.unsigned_distance(*p))
        .fold(f64::INFINITY, f64::min)
}
