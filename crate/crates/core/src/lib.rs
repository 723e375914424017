//! Numerical laboratory for detecting an obstacle immersed in a stationary
//! Navier–Stokes flow from boundary measurements.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: star-shaped boundaries, distances, offsets, regularity.
//! - [`meshing`]: conforming triangulations of the flow domain with tagged
//!   boundaries.
//! - [`ns_solver`]: Taylor–Hood (P2/P1) Stokes and Navier–Stokes solves and
//!   their diagnostics.
//! - [`cauchy`]: boundary tractions and the weighted Fourier trace norms.
//! - [`continuation`]: empirical checks of three-spheres, Caccioppoli,
//!   Poincaré, interpolation and propagation-of-smallness inequalities.
//! - [`stability`]: obstacle families, paired experiments, modulus fits and a
//!   baseline reconstruction loop.

pub mod cauchy;
pub mod continuation;
pub mod stability;
pub mod geometry;
pub mod meshing;
pub mod ns_solver;
pub mod quadrature;
