use std::f64::consts::TAU;

use super::point::Point;
use super::shape::StarShape;

/// Arclength parameterization of a closed star-shaped curve, measured
/// counter-clockwise from the polar angle `theta0`.
#[derive(Clone, Debug)]
pub struct ArclengthMap {
    theta0: f64,
    step: f64,
    table: Vec<f64>,
}

impl ArclengthMap {
    pub const DEFAULT_RESOLUTION: usize = 16384;

    pub fn new(shape: &StarShape, theta0: f64) -> Self {
        Self::with_resolution(shape, theta0, Self::DEFAULT_RESOLUTION)
    }

    /// Cumulative arclength on `n` intervals, each integrated with Simpson's
    /// rule on the speed `|q'(θ)|`.
    pub fn with_resolution(shape: &StarShape, theta0: f64, n: usize) -> Self {
        let step = TAU / n as f64;
        let speed = |t: f64| shape.point_derivatives(t).1.norm();
        let mut table = Vec::with_capacity(n + 1);
        let mut acc = 0.0;
        table.push(0.0);
        for i in 0..n {
            let a = theta0 + step * i as f64;
            acc += step / 6.0 * (speed(a) + 4.0 * speed(a + 0.5 * step) + speed(a + step));
            table.push(acc);
        }
        ArclengthMap { theta0, step, table }
    }

    pub fn length(&self) -> f64 {
        *self.table.last().unwrap()
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    /// Arclength in `[0, L)` of the polar angle `theta`.
    pub fn s_of_theta(&self, theta: f64) -> f64 {
        let off = (theta - self.theta0).rem_euclid(TAU);
        let x = off / self.step;
        let i = (x.floor() as usize).min(self.table.len() - 2);
        let f = x - i as f64;
        self.table[i] + f * (self.table[i + 1] - self.table[i])
    }

    /// Polar angle at arclength `s` (taken modulo the length).
    pub fn theta_of_s(&self, s: f64) -> f64 {
        let s = s.rem_euclid(self.length());
        let i = self.table.partition_point(|&v| v <= s).clamp(1, self.table.len() - 1) - 1;
        let f = (s - self.table[i]) / (self.table[i + 1] - self.table[i]);
        self.theta0 + self.step * (i as f64 + f)
    }

    /// Arclength position of the point `p` via its polar angle.
    pub fn s_of_point(&self, shape: &StarShape, p: Point) -> f64 {
        self.s_of_theta(shape.polar_angle(p))
    }
}
