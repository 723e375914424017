use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::OnceLock;

use super::point::{wrap_angle, Point};
use super::GeometryError;

/// Number of boundary samples used by default for every boundary sweep.
pub const DEFAULT_SAMPLES: usize = 4096;

/// A star-shaped closed curve `c + r(θ)(cos θ, sin θ)` with a truncated
/// Fourier radius `r(θ) = a₀ + Σ aₖ cos kθ + bₖ sin kθ`.
pub struct StarShape {
    center: Point,
    a: Vec<f64>,
    b: Vec<f64>,
    samples: OnceLock<Vec<Point>>,
}

impl Clone for StarShape {
    fn clone(&self) -> Self {
        StarShape {
            center: self.center,
            a: self.a.clone(),
            b: self.b.clone(),
            samples: self.samples.clone(),
        }
    }
}

impl PartialEq for StarShape {
    fn eq(&self, other: &Self) -> bool {
        self.center == other.center && self.a == other.a && self.b == other.b
    }
}

impl fmt::Debug for StarShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StarShape")
            .field("center", &self.center)
            .field("a", &self.a)
            .field("b", &self.b)
            .finish()
    }
}

/// Per-sample boundary data.
#[derive(Clone, Copy, Debug)]
pub struct BoundarySample {
    pub theta: f64,
    pub point: Point,
    /// Unit outward normal.
    pub normal: Point,
    /// Signed curvature, positive where the curve is locally convex.
    pub curvature: f64,
}

/// Result of a sampled Hausdorff distance computation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HausdorffDistance {
    pub distance: f64,
    /// Upper bound on the error introduced by sampling: perimeter / N,
    /// taken over both curves.
    pub sampling_error: f64,
}

impl StarShape {
    /// Builds a shape from `a = [a₀, a₁, …, a_K]` and `b = [b₁, …, b_K]`.
    pub fn new(center: Point, a: Vec<f64>, b: Vec<f64>) -> Result<Self, GeometryError> {
        if a.is_empty() || b.len() + 1 != a.len() {
            return Err(GeometryError::CoefficientLength {
                a: a.len(),
                b: b.len(),
            });
        }
        if !center.x.is_finite()
            || !center.y.is_finite()
            || a.iter().chain(b.iter()).any(|v| !v.is_finite())
        {
            return Err(GeometryError::NonFinite);
        }
        let shape = StarShape {
            center,
            a,
            b,
            samples: OnceLock::new(),
        };
        let min_radius = (0..DEFAULT_SAMPLES)
            .map(|i| shape.radius(TAU * i as f64 / DEFAULT_SAMPLES as f64))
            .fold(f64::INFINITY, f64::min);
        if min_radius <= 0.0 {
            return Err(GeometryError::NonPositiveRadius { min_radius });
        }
        Ok(shape)
    }

    pub fn circle(center: Point, radius: f64) -> Result<Self, GeometryError> {
        StarShape::new(center, vec![radius], vec![])
    }

    /// Least-squares Fourier fit of order `order` to radii sampled at
    /// `θᵢ = 2πi/N`.
    pub fn fit_radii(center: Point, radii: &[f64], order: usize) -> Result<Self, GeometryError> {
        let n = radii.len();
        if n < 2 * order + 1 {
            return Err(GeometryError::TooFewSamples {
                needed: 2 * order + 1,
                got: n,
            });
        }
        let mut a = vec![0.0; order + 1];
        let mut b = vec![0.0; order];
        for (i, &r) in radii.iter().enumerate() {
            let theta = TAU * i as f64 / n as f64;
            a[0] += r;
            for k in 1..=order {
                let (s, c) = (k as f64 * theta).sin_cos();
                a[k] += r * c;
                b[k - 1] += r * s;
            }
        }
        a[0] /= n as f64;
        for k in 1..=order {
            // The Nyquist mode of an even-length grid carries no sine part
            // and double weight on the cosine.
            let scale = if 2 * k == n { 1.0 } else { 2.0 };
            a[k] *= scale / n as f64;
            b[k - 1] *= 2.0 / n as f64;
        }
        StarShape::new(center, a, b)
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn cos_coeffs(&self) -> &[f64] {
        &self.a
    }

    pub fn sin_coeffs(&self) -> &[f64] {
        &self.b
    }

    /// Truncation order K.
    pub fn order(&self) -> usize {
        self.b.len()
    }

    /// Returns `(r, r', r'')` at `theta`.
    pub fn radius_derivatives(&self, theta: f64) -> (f64, f64, f64) {
        let mut r = self.a[0];
        let mut dr = 0.0;
        let mut d2r = 0.0;
        for k in 1..=self.order() {
            let kf = k as f64;
            let (s, c) = (kf * theta).sin_cos();
            let (ak, bk) = (self.a[k], self.b[k - 1]);
            r += ak * c + bk * s;
            dr += kf * (-ak * s + bk * c);
            d2r -= kf * kf * (ak * c + bk * s);
        }
        (r, dr, d2r)
    }

    pub fn radius(&self, theta: f64) -> f64 {
        let mut r = self.a[0];
        for k in 1..=self.order() {
            let (s, c) = (k as f64 * theta).sin_cos();
            r += self.a[k] * c + self.b[k - 1] * s;
        }
        r
    }

    pub fn point(&self, theta: f64) -> Point {
        self.center + Point::from_polar(self.radius(theta), theta)
    }

    /// First and second derivative of the parameterization with respect to θ.
    pub fn point_derivatives(&self, theta: f64) -> (Point, Point, Point) {
        let (r, dr, d2r) = self.radius_derivatives(theta);
        let (s, c) = theta.sin_cos();
        let e = Point::new(c, s);
        let e_perp = Point::new(-s, c);
        let q = self.center + e * r;
        let dq = e * dr + e_perp * r;
        let d2q = e * (d2r - r) + e_perp * (2.0 * dr);
        (q, dq, d2q)
    }

    pub fn sample(&self, theta: f64) -> BoundarySample {
        let (r, dr, d2r) = self.radius_derivatives(theta);
        let (q, dq, _) = self.point_derivatives(theta);
        let speed2 = r * r + dr * dr;
        BoundarySample {
            theta,
            point: q,
            normal: Point::new(dq.y, -dq.x).normalized(),
            curvature: (r * r + 2.0 * dr * dr - r * d2r) / speed2.powf(1.5),
        }
    }

    pub fn outward_normal(&self, theta: f64) -> Point {
        self.sample(theta).normal
    }

    /// Boundary samples at `n` equispaced angles.
    pub fn samples(&self, n: usize) -> Vec<BoundarySample> {
        (0..n)
            .map(|i| self.sample(TAU * i as f64 / n as f64))
            .collect()
    }

    /// Cached boundary points at the default sample count.
    pub fn boundary_points(&self) -> &[Point] {
        self.samples.get_or_init(|| {
            (0..DEFAULT_SAMPLES)
                .map(|i| self.point(TAU * i as f64 / DEFAULT_SAMPLES as f64))
                .collect()
        })
    }

    /// Polar angle of `p` about the shape center, in `[0, 2π)`.
    pub fn polar_angle(&self, p: Point) -> f64 {
        wrap_angle((p - self.center).angle())
    }

    pub fn contains(&self, p: Point) -> bool {
        let d = p - self.center;
        d.norm() < self.radius(d.angle())
    }

    /// Signed distance to the boundary: negative inside, positive outside.
    pub fn signed_distance(&self, p: Point) -> f64 {
        let d = self.unsigned_distance(p);
        if self.contains(p) {
            -d
        } else {
            d
        }
    }

    /// Distance from `p` to the boundary curve. A coarse sweep over the cached
    /// samples brackets the nearest point; a golden-section search in the
    /// bracket refines it.
    pub fn unsigned_distance(&self, p: Point) -> f64 {
        let pts = self.boundary_points();
        let n = pts.len();
        let (best, _) = pts
            .iter()
            .enumerate()
            .map(|(i, q)| (i, q.distance(p)))
            .fold((0usize, f64::INFINITY), |acc, (i, d)| {
                if d < acc.1 {
                    (i, d)
                } else {
                    acc
                }
            });
        let step = TAU / n as f64;
        let theta0 = step * best as f64;
        let f = |t: f64| self.point(t).distance(p);
        let (mut lo, mut hi) = (theta0 - step, theta0 + step);
        const INV_PHI: f64 = 0.618_033_988_749_894_8;
        let mut x1 = hi - INV_PHI * (hi - lo);
        let mut x2 = lo + INV_PHI * (hi - lo);
        let mut f1 = f(x1);
        let mut f2 = f(x2);
        for _ in 0..64 {
            if f1 < f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - INV_PHI * (hi - lo);
                f1 = f(x1);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + INV_PHI * (hi - lo);
                f2 = f(x2);
            }
        }
        f1.min(f2).min(f(theta0))
    }

    /// Enclosed area, `π a₀² + (π/2) Σ (aₖ² + bₖ²)`.
    pub fn area(&self) -> f64 {
        let tail: f64 = self.a[1..]
            .iter()
            .chain(self.b.iter())
            .map(|v| v * v)
            .sum();
        PI * self.a[0] * self.a[0] + 0.5 * PI * tail
    }

    pub fn perimeter(&self) -> f64 {
        let pts = self.boundary_points();
        let n = pts.len();
        (0..n).map(|i| pts[i].distance(pts[(i + 1) % n])).sum()
    }

    /// Cumulative arclength at `n` equispaced angles (first entry 0) and the
    /// total length, computed with 8 sub-steps per interval.
    pub fn arclength_table(&self, n: usize) -> (Vec<f64>, f64) {
        let sub = 8;
        let mut table = Vec::with_capacity(n);
        let mut acc = 0.0;
        let mut prev = self.point(0.0);
        for i in 0..n {
            table.push(acc);
            for j in 1..=sub {
                let t = TAU * (i as f64 + j as f64 / sub as f64) / n as f64;
                let q = self.point(t);
                acc += q.distance(prev);
                prev = q;
            }
        }
        (table, acc)
    }

    /// Angles of `count` points equispaced in arclength, starting at θ = 0.
    pub fn equispaced_angles(&self, count: usize) -> Vec<f64> {
        let fine = (count * 16).max(DEFAULT_SAMPLES);
        let (table, total) = self.arclength_table(fine);
        let step = TAU / fine as f64;
        let mut out = Vec::with_capacity(count);
        let mut j = 0;
        for i in 0..count {
            let target = total * i as f64 / count as f64;
            while j + 1 < fine && table[j + 1] <= target {
                j += 1;
            }
            let next = if j + 1 < fine { table[j + 1] } else { total };
            let frac = if next > table[j] {
                (target - table[j]) / (next - table[j])
            } else {
                0.0
            };
            out.push(step * (j as f64 + frac));
        }
        out
    }

    /// Minimum radius of curvature over convex and concave samples alike.
    pub fn min_curvature_radius(&self, n: usize) -> f64 {
        self.samples(n)
            .iter()
            .map(|s| 1.0 / s.curvature.abs())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn translated(&self, offset: Point) -> StarShape {
        StarShape {
            center: self.center + offset,
            a: self.a.clone(),
            b: self.b.clone(),
            samples: OnceLock::new(),
        }
    }

    /// Rotation by `angle` about the origin.
    pub fn rotated(&self, angle: f64) -> StarShape {
        let mut a = self.a.clone();
        let mut b = self.b.clone();
        for k in 1..=self.order() {
            let (s, c) = (k as f64 * angle).sin_cos();
            let (ak, bk) = (self.a[k], self.b[k - 1]);
            a[k] = ak * c - bk * s;
            b[k - 1] = ak * s + bk * c;
        }
        StarShape {
            center: self.center.rotated(angle),
            a,
            b,
            samples: OnceLock::new(),
        }
    }

    /// Uniform scaling about the origin.
    pub fn scaled(&self, factor: f64) -> Result<StarShape, GeometryError> {
        StarShape::new(
            self.center * factor,
            self.a.iter().map(|v| v * factor).collect(),
            self.b.iter().map(|v| v * factor).collect(),
        )
    }

    /// Copy with the cosine coefficient of mode `k` shifted by `delta`
    /// (mode 0 dilates).
    pub fn with_cos_shift(&self, k: usize, delta: f64) -> Result<StarShape, GeometryError> {
        let mut a = self.a.clone();
        let mut b = self.b.clone();
        if k >= a.len() {
            a.resize(k + 1, 0.0);
            b.resize(k, 0.0);
        }
        a[k] += delta;
        StarShape::new(self.center, a, b)
    }

    /// One-line text record `center_x center_y K a0 a1..aK b1..bK`.
    pub fn to_record(&self) -> String {
        let mut out = format!(
            "{:.16e} {:.16e} {}",
            self.center.x,
            self.center.y,
            self.order()
        );
        for v in self.a.iter().chain(self.b.iter()) {
            out.push_str(&format!(" {v:.16e}"));
        }
        out
    }

    pub fn from_record(line: &str) -> Result<StarShape, GeometryError> {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = |msg: &str| GeometryError::Record(format!("{msg}: `{}`", line.trim()));
        if fields.len() < 4 {
            return Err(bad("expected at least 4 fields"));
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad("invalid number"));
        let cx = num(fields[0])?;
        let cy = num(fields[1])?;
        let k: usize = fields[2].parse().map_err(|_| bad("invalid order"))?;
        if fields.len() != 3 + 2 * k + 1 {
            return Err(bad("field count does not match order"));
        }
        let coeffs = fields[3..]
            .iter()
            .map(|s| num(s))
            .collect::<Result<Vec<_>, _>>()?;
        StarShape::new(
            Point::new(cx, cy),
            coeffs[..=k].to_vec(),
            coeffs[k + 1..].to_vec(),
        )
    }
}

/// Symmetric sampled Hausdorff distance between two boundary curves using
/// the default sample count.
pub fn hausdorff_distance(a: &StarShape, b: &StarShape) -> HausdorffDistance {
    hausdorff_distance_with(a, b, DEFAULT_SAMPLES)
}

/// Directed distances are sup over `n` samples of one curve of the refined
/// point-to-curve distance to the other.
pub fn hausdorff_distance_with(a: &StarShape, b: &StarShape, n: usize) -> HausdorffDistance {
    let directed = |from: &StarShape, to: &StarShape| {
        (0..n)
            .map(|i| to.unsigned_distance(from.point(TAU * i as f64 / n as f64)))
            .fold(0.0, f64::max)
    };
    HausdorffDistance {
        distance: directed(a, b).max(directed(b, a)),
        sampling_error: a.perimeter().max(b.perimeter()) / n as f64,
    }
}
