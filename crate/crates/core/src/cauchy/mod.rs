//! Cauchy data on Γ: velocity and traction samples on a uniform arclength
//! grid of the container curve, and the weighted Fourier trace norms.
//!
//! Norm convention. The closed container curve of length `L` carries `N`
//! (a power of two) samples `s_k = k·L/N`, starting at the first end of Γ.
//! Values given on Γ are extended by zero to the whole curve. With the
//! unnormalized DFT coefficients `ĉ_k` of each component,
//!
//! `‖v‖²_{H^{±1/2}} = ρ₀⁻¹ (L/N²) Σ_k (1 + (2πρ₀k/L)²)^{±1/2} |ĉ_k|²`,
//!
//! summed over both components, with `k` the signed frequency. The L² norm
//! uses weight 1 under the same scaling.

use std::io::{BufRead, Write};

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::geometry::{ArclengthMap, DomainSpec};
use crate::ns_solver::{BoundaryData, FlowField, Vec2};

#[cfg(test)]
mod tests;

#[derive(Debug, thiserror::Error)]
pub enum CauchyError {
    #[error("grid size {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("samples are not on the uniform grid: {0}")]
    NonUniformGrid(String),
    #[error("mismatched Cauchy pairs: {0}")]
    Mismatch(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("csv: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Uniform grid of `n` points on a closed curve of length `length`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArcGrid {
    pub length: f64,
    pub n: usize,
}

impl ArcGrid {
    pub fn new(length: f64, n: usize) -> Result<Self, CauchyError> {
        if !n.is_power_of_two() || n < 2 {
            return Err(CauchyError::NotPowerOfTwo(n));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(CauchyError::Invalid(format!("curve length {length}")));
        }
        Ok(ArcGrid { length, n })
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    pub fn s(&self, k: usize) -> f64 {
        k as f64 * self.spacing()
    }

    /// Grid index of every sample, checking uniform spacing.
    fn indices(&self, s: &[f64]) -> Result<Vec<usize>, CauchyError> {
        if s.len() > self.n {
            return Err(CauchyError::NonUniformGrid(format!("{} samples on a grid of {}", s.len(), self.n)));
        }
        let ds = self.spacing();
        let tol = 1e-9 * ds;
        let mut out = Vec::with_capacity(s.len());
        for (i, &si) in s.iter().enumerate() {
            let x = si / ds;
            let k = x.round();
            if (x - k).abs() * ds > tol || k < 0.0 {
                return Err(CauchyError::NonUniformGrid(format!("s = {si} is off the grid of spacing {ds}")));
            }
            if i > 0 && (si - s[i - 1] - ds).abs() > tol {
                return Err(CauchyError::NonUniformGrid(format!(
                    "spacing {} at sample {i}, expected {ds}",
                    si - s[i - 1]
                )));
            }
            out.push(k as usize % self.n);
        }
        Ok(out)
    }
}

/// Weighted sum `Σ_k w(k)|ĉ_k|²` with the signed frequency `k`.
fn weighted_power(grid: &ArcGrid, s: &[f64], values: &[Vec2], rho0: f64, exponent: f64) -> Result<f64, CauchyError> {
    if s.len() != values.len() {
        return Err(CauchyError::Invalid(format!("{} positions for {} values", s.len(), values.len())));
    }
    if !(rho0 > 0.0) {
        return Err(CauchyError::Invalid(format!("rho0 = {rho0}")));
    }
    let idx = grid.indices(s)?;
    let n = grid.n;
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let mut total = 0.0;
    for c in 0..2 {
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        for (&k, v) in idx.iter().zip(values) {
            buf[k].re = v[c];
        }
        fft.process(&mut buf);
        for (i, z) in buf.iter().enumerate() {
            let k = if i <= n / 2 { i as f64 } else { i as f64 - n as f64 };
            let xi = std::f64::consts::TAU * rho0 * k / grid.length;
            total += (1.0 + xi * xi).powf(exponent) * z.norm_sqr();
        }
    }
    Ok(total * grid.length / (n as f64 * n as f64) / rho0)
}

/// `‖v‖_{H^{-1/2}}` under the module convention.
pub fn h_minus_half_norm(grid: &ArcGrid, s: &[f64], values: &[Vec2], rho0: f64) -> Result<f64, CauchyError> {
    weighted_power(grid, s, values, rho0, -0.5).map(f64::sqrt)
}

/// `‖v‖_{H^{1/2}}` under the module convention.
pub fn h_half_norm(grid: &ArcGrid, s: &[f64], values: &[Vec2], rho0: f64) -> Result<f64, CauchyError> {
    weighted_power(grid, s, values, rho0, 0.5).map(f64::sqrt)
}

/// L² norm under the module convention (weight 1).
pub fn l2_trace_norm(grid: &ArcGrid, s: &[f64], values: &[Vec2], rho0: f64) -> Result<f64, CauchyError> {
    weighted_power(grid, s, values, rho0, 0.0).map(f64::sqrt)
}

/// Velocity and traction samples on the Γ part of an [`ArcGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct CauchyPair {
    pub grid: ArcGrid,
    pub s: Vec<f64>,
    pub g: Vec<Vec2>,
    pub psi: Vec<Vec2>,
    /// Analytic outward normal at each sample.
    pub normals: Vec<Vec2>,
    pub rho0: f64,
    pub support: Option<(f64, f64)>,
}

/// Default grid size for measurements.
pub const DEFAULT_SAMPLES: usize = 1024;

/// Traction `σ(u,p)·ν` at the grid points of Γ, using the analytic container
/// curve and normal and the one-sided trace of the triangle containing (or
/// nearest to) each point.
pub fn compute_normal_stress(
    field: &FlowField,
    domain: &DomainSpec,
    g: &BoundaryData,
    n: usize,
) -> Result<CauchyPair, CauchyError> {
    let container = &domain.container;
    let map = ArclengthMap::new(container, domain.gamma.start);
    let grid = ArcGrid::new(map.length(), n)?;
    let full = domain.gamma.span() >= std::f64::consts::TAU - 1e-12;
    let gamma_len = if full { map.length() } else { map.s_of_theta(domain.gamma.end) };
    let count = if full {
        n
    } else {
        ((gamma_len / grid.spacing() + 1e-9).floor() as usize + 1).min(n)
    };
    let mut pair = CauchyPair {
        grid,
        s: Vec::with_capacity(count),
        g: Vec::with_capacity(count),
        psi: Vec::with_capacity(count),
        normals: Vec::with_capacity(count),
        rho0: domain.rho0,
        support: g.support,
    };
    for k in 0..count {
        let s = grid.s(k);
        let theta = map.theta_of_s(s);
        let x = container.point(theta);
        let nu = container.outward_normal(theta);
        let (_, value) = field.eval_at(x);
        pair.s.push(s);
        pair.g.push(g.eval(x));
        pair.psi.push(value.traction(field.mu, nu));
        pair.normals.push([nu.x, nu.y]);
    }
    Ok(pair)
}

/// `ε = ρ₀‖ψ₁ − ψ₂‖_{H^{-1/2}}` for pairs on the same grid with the same
/// boundary data.
pub fn discrepancy(a: &CauchyPair, b: &CauchyPair) -> Result<f64, CauchyError> {
    let tol = 1e-9 * a.grid.spacing();
    if a.grid != b.grid || a.s.len() != b.s.len() || a.s.iter().zip(&b.s).any(|(x, y)| (x - y).abs() > tol) {
        return Err(CauchyError::Mismatch("different sampling grids".into()));
    }
    if (a.rho0 - b.rho0).abs() > 1e-12 * a.rho0 {
        return Err(CauchyError::Mismatch(format!("rho0 {} vs {}", a.rho0, b.rho0)));
    }
    let gmax = a.g.iter().map(|v| v[0].hypot(v[1])).fold(1.0, f64::max);
    for (ga, gb) in a.g.iter().zip(&b.g) {
        if (ga[0] - gb[0]).hypot(ga[1] - gb[1]) > 1e-10 * gmax {
            return Err(CauchyError::Mismatch("boundary data differ".into()));
        }
    }
    let diff: Vec<Vec2> = a.psi.iter().zip(&b.psi).map(|(p, q)| [p[0] - q[0], p[1] - q[1]]).collect();
    Ok(a.rho0 * h_minus_half_norm(&a.grid, &a.s, &diff, a.rho0)?)
}

pub const CSV_HEADER: &str = "s,g_x,g_y,psi_x,psi_y";

pub fn write_pair_csv(pair: &CauchyPair, mut w: impl Write) -> Result<(), CauchyError> {
    writeln!(w, "{CSV_HEADER}")?;
    for k in 0..pair.s.len() {
        writeln!(
            w,
            "{:.14e},{:.14e},{:.14e},{:.14e},{:.14e}",
            pair.s[k], pair.g[k][0], pair.g[k][1], pair.psi[k][0], pair.psi[k][1]
        )?;
    }
    Ok(())
}

/// Reads `s, g, ψ` columns; the grid and scale come from the caller and
/// normals are left empty.
pub fn read_pair_csv(grid: ArcGrid, rho0: f64, r: impl BufRead) -> Result<CauchyPair, CauchyError> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| CauchyError::Format("empty file".into()))??;
    if header.trim() != CSV_HEADER {
        return Err(CauchyError::Format(format!("unexpected header `{header}`")));
    }
    let mut pair = CauchyPair {
        grid,
        s: Vec::new(),
        g: Vec::new(),
        psi: Vec::new(),
        normals: Vec::new(),
        rho0,
        support: None,
    };
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split(',')
            .map(|x| x.trim().parse().map_err(|_| CauchyError::Format(format!("bad number `{x}`"))))
            .collect::<Result<_, _>>()?;
        if v.len() != 5 {
            return Err(CauchyError::Format(format!("expected 5 columns in `{line}`")));
        }
        pair.s.push(v[0]);
        pair.g.push([v[1], v[2]]);
        pair.psi.push([v[3], v[4]]);
    }
    grid.indices(&pair.s)?;
    Ok(pair)
}
