//! Star-shaped boundaries, distances and the a priori domain description.
//!
//! Geometry values are immutable once built and every operation here is a
//! pure function, so shapes can be shared freely between worker threads.

mod arclength;
mod domain;
mod offset;
mod point;
mod regularity;
mod shape;

pub use arclength::ArclengthMap;
pub use domain::{obstacle_clearance, DomainSpec, GammaArc};
pub use offset::{regularize_obstacle, RegularizeOptions, RegularizedShape};
pub use point::{orient, segment_distance, wrap_angle, Point};
pub use regularity::{
    estimate_regularity_constants, estimate_regularity_constants_with, RegularityEstimate,
};
pub use shape::{
    hausdorff_distance, hausdorff_distance_with, BoundarySample, HausdorffDistance, StarShape,
    DEFAULT_SAMPLES,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("expected K+1 cosine and K sine coefficients, got {a} and {b}")]
    CoefficientLength { a: usize, b: usize },
    #[error("non-finite shape parameter")]
    NonFinite,
    #[error("radius function is not positive (minimum {min_radius})")]
    NonPositiveRadius { min_radius: f64 },
    #[error("need at least {needed} samples for the fit, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("malformed shape record: {0}")]
    Record(String),
    #[error("offset h = {h} outside the admissible range [0, {limit}]")]
    OffsetOutOfRange { h: f64, limit: f64 },
    #[error("offset curve self-intersects near θ = {theta}")]
    SelfIntersectingOffset { theta: f64 },
    #[error("invalid length scale rho0 = {rho0}")]
    InvalidScale { rho0: f64 },
    #[error("{which} curvature radius {radius} is below rho0 = {rho0}")]
    CurvatureRadius {
        which: &'static str,
        radius: f64,
        rho0: f64,
    },
    #[error("obstacle is not contained in the container")]
    ObstacleOutside,
    #[error("obstacle is {distance} from the container boundary, below rho0 = {rho0}")]
    ObstacleTooClose { distance: f64, rho0: f64 },
    #[error("flow area {area} exceeds M1 rho0^2 = {bound}")]
    AreaBound { area: f64, bound: f64 },
    #[error("accessible arc does not contain a boundary patch of radius {rho0} around its midpoint")]
    GammaPatch { rho0: f64 },
    #[error("invalid arc [{start}, {end}]")]
    InvalidArc { start: f64, end: f64 },
}
