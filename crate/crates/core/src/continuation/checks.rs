use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::ball::{ball_quadrature, check_ball, visit_ball, BallField, Clearance, FieldDifference, Integrand};
use super::{ContinuationError, InequalityKind, InequalityRecord, RecordFlag};
use crate::geometry::Point;
use crate::ns_solver::{grad_norm2, BoundaryData, FlowField};
use crate::quadrature::triangle7;

/// Default upper bound on `r₂/r₃`.
pub const THETA_STAR: f64 = 0.6;
/// Default `(r₁/r₃, r₂/r₃)`.
pub const DEFAULT_RATIOS: (f64, f64) = (1.0 / 8.0, 3.0 / 8.0);
/// Default erosion factor of the propagation-of-smallness profile.
pub const DEFAULT_S: f64 = 3.0;

/// Squared quantities below `ZERO_REL` times the outer one count as zero.
const ZERO_REL: f64 = f64::EPSILON * f64::EPSILON;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BallTriple {
    pub center: Point,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
}

impl BallTriple {
    /// Requires `0 < r1 < r2 < θ*·r3` with `θ* ≤ e^{-1/2}`.
    pub fn new(center: Point, r1: f64, r2: f64, r3: f64, theta_star: f64) -> Result<Self, ContinuationError> {
        if !(theta_star > 0.0 && theta_star <= (-0.5f64).exp()) {
            return Err(ContinuationError::Invalid(format!("theta* = {theta_star} outside (0, e^-1/2]")));
        }
        if !(r1 > 0.0 && r1 < r2 && r2 < theta_star * r3 && r3.is_finite()) {
            return Err(ContinuationError::Invalid(format!(
                "radii ({r1}, {r2}, {r3}) violate 0 < r1 < r2 < {theta_star}·r3"
            )));
        }
        Ok(BallTriple { center, r1, r2, r3 })
    }

    pub fn with_ratios(center: Point, r3: f64, (a, b): (f64, f64)) -> Result<Self, ContinuationError> {
        Self::new(center, a * r3, b * r3, r3, THETA_STAR)
    }

    /// `log(r₃/r₂) / log(r₃/r₁)`.
    pub fn log_delta(&self) -> f64 {
        (self.r3 / self.r2).ln() / (self.r3 / self.r1).ln()
    }
}

/// `{0.05, 0.10, …, 0.95}`.
pub fn delta_grid() -> Vec<f64> {
    (1..=19).map(|k| k as f64 * 0.05).collect()
}

/// Smallest `C` with `N₂ ≤ C·N₁^δ·N₃^{1−δ}`; infinite when `N₁` vanishes
/// and `N₂` does not.
pub fn minimal_c(n: [f64; 3], delta: f64) -> f64 {
    let scale = n[2].max(n[1]).max(n[0]);
    if n[1] <= ZERO_REL * scale || scale == 0.0 {
        return 0.0;
    }
    if n[0] <= ZERO_REL * scale {
        return f64::INFINITY;
    }
    n[1] / (n[0].powf(delta) * n[2].powf(1.0 - delta))
}

fn spheres(
    field: &dyn BallField,
    clearance: &dyn Clearance,
    triple: &BallTriple,
    constants: Option<(f64, f64)>,
    what: Integrand,
    kind: InequalityKind,
) -> Result<InequalityRecord, ContinuationError> {
    let t = BallTriple::new(triple.center, triple.r1, triple.r2, triple.r3, (-0.5f64).exp())?;
    check_ball(clearance, t.center, t.r3)?;
    if let Some((d, c)) = constants {
        if !(d > 0.0 && d < 1.0 && c >= 0.0) {
            return Err(ContinuationError::Invalid(format!("constants (delta {d}, C {c})")));
        }
    }
    let n = [t.r1, t.r2, t.r3].map(|r| ball_quadrature(field, t.center, r, what, 1));
    let delta = constants.map_or(t.log_delta(), |(d, _)| d);
    let c_min = minimal_c(n, delta);
    let scale = n[2];
    let flag = if scale == 0.0 || n.iter().all(|&v| v <= ZERO_REL * scale) {
        RecordFlag::Trivial
    } else if c_min.is_infinite() {
        RecordFlag::Unverifiable
    } else {
        match constants {
            Some((_, c)) if c_min > c * (1.0 + 1e-12) => RecordFlag::Violated,
            _ => RecordFlag::Holds,
        }
    };
    let mut rec = InequalityRecord::new(kind);
    rec.center = Some(t.center);
    rec.r = [Some(t.r1), Some(t.r2), Some(t.r3)];
    rec.n = n.map(Some);
    rec.delta = Some(delta);
    rec.c = c_min;
    rec.flag = flag;
    Ok(rec)
}

/// `N₂ ≤ C N₁^δ N₃^{1−δ}` with `Nᵢ = ∫_{B_{rᵢ}}|u|²`. Without `constants`
/// the record carries the log-interpolation δ and the minimal C there.
pub fn three_spheres_check(
    field: &dyn BallField,
    clearance: &dyn Clearance,
    triple: &BallTriple,
    constants: Option<(f64, f64)>,
) -> Result<InequalityRecord, ContinuationError> {
    spheres(field, clearance, triple, constants, Integrand::Velocity, InequalityKind::ThreeSpheres)
}

/// As [`three_spheres_check`] with `Nᵢ = ∫_{B_{rᵢ}}|∇u|²`.
pub fn gradient_three_spheres_check(
    field: &dyn BallField,
    clearance: &dyn Clearance,
    triple: &BallTriple,
    constants: Option<(f64, f64)>,
) -> Result<InequalityRecord, ContinuationError> {
    spheres(field, clearance, triple, constants, Integrand::Gradient, InequalityKind::ThreeSpheresGrad)
}

/// Three spheres for `w = u₁ − u₂`. `clearance` must describe the common
/// flow region of both fields.
pub fn difference_three_spheres_check(
    u1: &FlowField,
    u2: &FlowField,
    clearance: &dyn Clearance,
    triple: &BallTriple,
    constants: Option<(f64, f64)>,
) -> Result<InequalityRecord, ContinuationError> {
    let w = FieldDifference::new(u1, u2);
    spheres(&w, clearance, triple, constants, Integrand::Velocity, InequalityKind::ThreeSpheresDiff)
}

/// Common `(δ, C)` over a set of three-spheres records.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CommonFit {
    pub delta: f64,
    /// `quantile` of the per-record minimal constants at `delta`.
    pub c: f64,
    /// Fraction of non-trivial records satisfied by `(delta, c)`.
    pub satisfied: f64,
    pub records: usize,
}

/// Common δ is the median of the records' own (log-interpolation) δ; the
/// constant is the `quantile` of the per-record minimal C there.
///
/// For a single triple the minimal C increases with δ whenever `N₁ < N₃`,
/// so minimizing over δ would always pick the smallest candidate.
pub fn fit_common_delta(records: &[InequalityRecord], quantile: f64) -> Result<CommonFit, ContinuationError> {
    if !(quantile > 0.0 && quantile <= 1.0) {
        return Err(ContinuationError::Invalid(format!("quantile {quantile}")));
    }
    let live: Vec<&InequalityRecord> = records.iter().filter(|r| r.flag != RecordFlag::Trivial).collect();
    let mut deltas: Vec<f64> = live.iter().filter_map(|r| r.delta).collect();
    if live.is_empty() || deltas.is_empty() {
        return Err(ContinuationError::Degenerate("no non-trivial records".into()));
    }
    deltas.sort_by(f64::total_cmp);
    let delta = deltas[deltas.len() / 2];
    let mut cs: Vec<f64> = live.iter().map(|r| minimal_c(r.n.map(|v| v.unwrap_or(0.0)), delta)).collect();
    cs.sort_by(f64::total_cmp);
    let k = ((quantile * cs.len() as f64).ceil() as usize).clamp(1, cs.len()) - 1;
    let c = cs[k];
    let satisfied = cs.iter().filter(|&&v| v <= c).count() as f64 / cs.len() as f64;
    Ok(CommonFit { delta, c, satisfied, records: cs.len() })
}

/// Seeded triples with fixed ratios, centers uniform in the box
/// `[lo, hi]` and `r₃` uniform in `r3_range`, kept when `B_{r₃}` is inside.
pub fn random_triples(
    clearance: &dyn Clearance,
    (lo, hi): (Point, Point),
    count: usize,
    ratios: (f64, f64),
    r3_range: (f64, f64),
    seed: u64,
) -> Result<Vec<BallTriple>, ContinuationError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let mut attempts = 0usize;
    while out.len() < count {
        attempts += 1;
        if attempts > 1000 * count.max(1) {
            return Err(ContinuationError::Invalid(format!(
                "found only {} of {count} admissible triples",
                out.len()
            )));
        }
        let c = Point::new(rng.random_range(lo.x..=hi.x), rng.random_range(lo.y..=hi.y));
        let r3 = if r3_range.1 > r3_range.0 { rng.random_range(r3_range.0..=r3_range.1) } else { r3_range.0 };
        if clearance.clearance(c) >= r3 {
            out.push(BallTriple::with_ratios(c, r3, ratios)?);
        }
    }
    Ok(out)
}

/// `(R−r)² ∫_{B_r}|∇u|² / ∫_{B_R}|u|²`.
pub fn caccioppoli_ratio(
    field: &dyn BallField,
    clearance: &dyn Clearance,
    center: Point,
    r: f64,
    big_r: f64,
) -> Result<InequalityRecord, ContinuationError> {
    if !(r > 0.0 && r < big_r) {
        return Err(ContinuationError::Invalid(format!("need 0 < r < R, got r = {r}, R = {big_r}")));
    }
    check_ball(clearance, center, big_r)?;
    let grad = ball_quadrature(field, center, r, Integrand::Gradient, 1);
    let mass = ball_quadrature(field, center, big_r, Integrand::Velocity, 1);
    let num = (big_r - r).powi(2) * grad;
    let mut rec = InequalityRecord::new(InequalityKind::Caccioppoli);
    rec.center = Some(center);
    rec.r = [Some(r), None, Some(big_r)];
    rec.n = [Some(grad), None, Some(mass)];
    if mass > 0.0 {
        rec.c = num / mass;
    } else if num > 0.0 {
        rec.c = f64::INFINITY;
        rec.flag = RecordFlag::Degenerate;
    } else {
        rec.flag = RecordFlag::Trivial;
    }
    Ok(rec)
}

/// Trace level below which a boundary value counts as vanishing.
pub const PATCH_TOL: f64 = 1e-8;

/// `‖u‖ / (ρ₀‖∇u‖)` over the whole mesh. The field must vanish (below
/// [`PATCH_TOL`]) at every boundary node within `patch_radius` of some
/// boundary node.
pub fn poincare_ratio(field: &FlowField, rho0: f64, patch_radius: f64) -> Result<InequalityRecord, ContinuationError> {
    if !(rho0 > 0.0 && patch_radius > 0.0) {
        return Err(ContinuationError::Invalid(format!("rho0 {rho0}, patch radius {patch_radius}")));
    }
    let space = &field.space;
    let nodes: Vec<(Point, bool)> = (0..space.n_nodes())
        .filter(|&n| space.is_boundary(n))
        .map(|n| {
            let u = field.velocity[n];
            (space.node_point(n), u[0].hypot(u[1]) <= PATCH_TOL)
        })
        .collect();
    let patch = nodes.iter().any(|&(p, zero)| {
        zero && nodes.iter().all(|&(q, z)| z || q.distance(p) > patch_radius)
    });
    if !patch {
        return Err(ContinuationError::Precondition(format!(
            "no boundary patch of radius {patch_radius} where the trace vanishes"
        )));
    }
    let u2 = field.integrate(|_, v| v.u[0] * v.u[0] + v.u[1] * v.u[1]);
    let g2 = field.integrate(|_, v| grad_norm2(&v.grad));
    let mut rec = InequalityRecord::new(InequalityKind::Poincare);
    rec.r = [Some(rho0), None, None];
    rec.n = [Some(u2), Some(g2), None];
    if u2 == 0.0 {
        rec.flag = RecordFlag::Trivial;
        return Ok(rec);
    }
    if g2 == 0.0 {
        return Err(ContinuationError::Degenerate("zero gradient with nonzero field".into()));
    }
    rec.c = u2.sqrt() / (rho0 * g2.sqrt());
    Ok(rec)
}

/// Points on the bounding circle sampled for the sup norms.
const RIM_SAMPLES: usize = 256;

/// Minimal `C` in `‖v‖_∞ ≤ C[(∫|v|²)^{1/4}‖∇v‖_∞^{1/2} + t⁻¹(∫|v|²)^{1/2}]`
/// on `B_t(center)`. Sup norms are maxima over quadrature points, the
/// center and the rim. With `c` supplied the record is flagged against it.
pub fn interpolation_check(
    field: &dyn BallField,
    clearance: &dyn Clearance,
    center: Point,
    t: f64,
    c: Option<f64>,
) -> Result<InequalityRecord, ContinuationError> {
    check_ball(clearance, center, t)?;
    let mut l2 = 0.0;
    let mut sup_u = 0.0f64;
    let mut sup_g = 0.0f64;
    visit_ball(field, center, t, 1, &mut |_, u, g, w| {
        let m = u[0] * u[0] + u[1] * u[1];
        l2 += w * m;
        sup_u = sup_u.max(m.sqrt());
        sup_g = sup_g.max(grad_norm2(g).sqrt());
    });
    let rim = (0..RIM_SAMPLES).map(|k| {
        let a = std::f64::consts::TAU * k as f64 / RIM_SAMPLES as f64;
        center + Point::new(a.cos(), a.sin()) * t
    });
    for x in std::iter::once(center).chain(rim) {
        let (u, g) = field.sample_at(x);
        sup_u = sup_u.max(u[0].hypot(u[1]));
        sup_g = sup_g.max(grad_norm2(&g).sqrt());
    }
    let bracket = l2.powf(0.25) * sup_g.sqrt() + l2.sqrt() / t;
    let mut rec = InequalityRecord::new(InequalityKind::Interpolation);
    rec.center = Some(center);
    rec.r = [Some(t), None, None];
    rec.n = [Some(l2), Some(sup_u), Some(sup_g)];
    if sup_u == 0.0 {
        rec.flag = RecordFlag::Trivial;
    } else if bracket == 0.0 {
        rec.c = f64::INFINITY;
        rec.flag = RecordFlag::Degenerate;
    } else {
        rec.c = sup_u / bracket;
        if let Some(c) = c {
            if rec.c > c * (1.0 + 1e-12) {
                rec.flag = RecordFlag::Violated;
            }
        }
    }
    Ok(rec)
}

/// `∫|∇u|²` over the whole integration mesh.
fn total_energy(field: &dyn BallField) -> f64 {
    let space = field.space();
    (0..space.n_triangles())
        .map(|t| {
            let geom = space.geom(t);
            triangle7()
                .iter()
                .map(|(l, w)| {
                    let x = geom.point_at(*l);
                    w * grad_norm2(&field.sample(t, &geom, *l, x).1)
                })
                .sum::<f64>()
                * geom.area
        })
        .sum()
}

/// Grid of spacing `ρ/2` centered on the mesh bounding box, restricted to
/// clearance above `erosion`.
fn centers(field: &dyn BallField, clearance: &dyn Clearance, rho: f64, erosion: f64) -> Vec<Point> {
    let v = &field.space().mesh().vertices;
    let (mut lo, mut hi) = (v[0], v[0]);
    for p in v {
        lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let mid = lo.lerp(hi, 0.5);
    let step = 0.5 * rho;
    let kx = ((hi.x - lo.x) / (2.0 * step)).ceil() as i64;
    let ky = ((hi.y - lo.y) / (2.0 * step)).ceil() as i64;
    let grid: Vec<Point> = (-ky..=ky)
        .flat_map(|j| (-kx..=kx).map(move |i| Point::new(mid.x + i as f64 * step, mid.y + j as f64 * step)))
        .collect();
    grid.into_par_iter().filter(|&p| clearance.clearance(p) > erosion).collect()
}

/// Center and value of `min ∫_{B_ρ(x̄)}|∇u|²` over grid centers with
/// clearance above `erosion`.
fn min_ball_energy(
    field: &dyn BallField,
    clearance: &dyn Clearance,
    rho: f64,
    erosion: f64,
) -> Result<(Point, f64), ContinuationError> {
    let cs = centers(field, clearance, rho, erosion);
    if cs.is_empty() {
        return Err(ContinuationError::EmptyErosion { rho });
    }
    let values: Vec<f64> =
        cs.par_iter().map(|&c| ball_quadrature(field, c, rho, Integrand::Gradient, 1)).collect();
    let (k, v) = values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bk, bv), (k, &v)| if v < bv { (k, v) } else { (bk, bv) });
    Ok((cs[k], v))
}

/// Measured propagation-of-smallness constants and the fit
/// `log(1/C_ρ) ≈ A(ρ₀/ρ)^B`.
#[derive(Clone, Debug, PartialEq)]
pub struct PosProfile {
    pub records: Vec<InequalityRecord>,
    /// `(A, B)`, when at least two values lie strictly inside `(0, 1)`.
    pub fit: Option<(f64, f64)>,
}

impl PosProfile {
    pub fn values(&self) -> Vec<(f64, f64)> {
        self.records.iter().map(|r| (r.r[0].unwrap_or(0.0), r.c)).collect()
    }
}

/// `C_ρ = min_{x̄ ∈ E_{sρ}} ∫_{B_ρ(x̄)}|∇u|² / ∫_E|∇u|²` for each `ρ`.
pub fn pos_profile(
    field: &dyn BallField,
    clearance: &dyn Clearance,
    rhos: &[f64],
    s: f64,
    rho0: f64,
) -> Result<PosProfile, ContinuationError> {
    if !(s > 1.0) || !(rho0 > 0.0) || rhos.iter().any(|&r| !(r > 0.0)) {
        return Err(ContinuationError::Invalid(format!("s = {s}, rho0 = {rho0}, rhos = {rhos:?}")));
    }
    let total = total_energy(field);
    if !(total > 0.0) {
        return Err(ContinuationError::Degenerate("∫|∇u|² vanishes".into()));
    }
    let mut records = Vec::with_capacity(rhos.len());
    for &rho in rhos {
        let (c, v) = min_ball_energy(field, clearance, rho, s * rho)?;
        let mut rec = InequalityRecord::new(InequalityKind::PosProfile);
        rec.center = Some(c);
        rec.r = [Some(rho), None, None];
        rec.n = [Some(v), None, Some(total)];
        rec.c = v / total;
        if v == 0.0 {
            rec.flag = RecordFlag::Degenerate;
        }
        records.push(rec);
    }
    let pts: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.c > 0.0 && r.c < 1.0)
        .map(|r| ((rho0 / r.r[0].unwrap_or(1.0)).ln(), (1.0 / r.c).ln().ln()))
        .collect();
    let fit = line_fit(&pts).map(|(a, b)| (a.exp(), b));
    Ok(PosProfile { records, fit })
}

/// Least-squares `y = a + b x`; `None` with fewer than two distinct `x`.
fn line_fit(pts: &[(f64, f64)]) -> Option<(f64, f64)> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let b = sxy / sxx;
    Some((my - b * mx, b))
}

/// `min_{x̄} ∫_{B_ρ(x̄)}|∇u|² / E²` over centers with clearance above
/// `(s+1)ρ`, where `E` is the Hölder-norm estimate of the boundary data.
pub fn pos_boundary_version(
    field: &dyn BallField,
    clearance: &dyn Clearance,
    rho: f64,
    s: f64,
    g: &BoundaryData,
) -> Result<InequalityRecord, ContinuationError> {
    if !(s > 1.0 && rho > 0.0) {
        return Err(ContinuationError::Invalid(format!("s = {s}, rho = {rho}")));
    }
    let e2 = g.holder_norm_estimate.powi(2);
    if !(e2 > 0.0) {
        return Err(ContinuationError::Degenerate("boundary data vanish".into()));
    }
    let (c, v) = min_ball_energy(field, clearance, rho, (s + 1.0) * rho)?;
    let mut rec = InequalityRecord::new(InequalityKind::PosProfile);
    rec.center = Some(c);
    rec.r = [Some(rho), None, None];
    rec.n = [Some(v), None, Some(e2)];
    rec.c = v / e2;
    if v == 0.0 {
        rec.flag = RecordFlag::Degenerate;
    }
    Ok(rec)
}
