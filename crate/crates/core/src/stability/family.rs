use super::StabilityError;
use crate::geometry::{hausdorff_distance, DomainSpec, Point, StarShape};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FamilyMode {
    /// Radius offset `a₀ + t`.
    Dilate,
    /// Center shift by `t` along +x.
    Translate,
    /// Mode perturbation `+ t·cos 3θ`.
    ModePerturb,
}

impl FamilyMode {
    pub fn name(self) -> &'static str {
        match self {
            FamilyMode::Dilate => "DILATE",
            FamilyMode::Translate => "TRANSLATE",
            FamilyMode::ModePerturb => "MODE_PERTURB",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "DILATE" => Some(FamilyMode::Dilate),
            "TRANSLATE" => Some(FamilyMode::Translate),
            "MODE_PERTURB" => Some(FamilyMode::ModePerturb),
            _ => None,
        }
    }

    fn apply(self, base: &StarShape, t: f64) -> Result<StarShape, StabilityError> {
        Ok(match self {
            FamilyMode::Dilate => base.with_cos_shift(0, t)?,
            FamilyMode::Translate => base.translated(Point::new(t, 0.0)),
            FamilyMode::ModePerturb => base.with_cos_shift(3, t)?,
        })
    }
}

/// Relative tolerance of the bisection on the measured distance.
const FAMILY_REL_TOL: f64 = 1e-4;
const MAX_BISECTIONS: usize = 60;

/// One shape per target with measured `d_H(base, shape) ≈ target`. The
/// parameter `t = target` is tried first (exact for dilation and
/// translation of a circle); otherwise `t` is bracketed by doubling and
/// bisected against [`hausdorff_distance`]. Every shape is validated
/// against `domain` (curvature, containment, clearance ≥ ρ₀).
pub fn generate_obstacle_family(
    base: &StarShape,
    mode: FamilyMode,
    targets: &[f64],
    domain: &DomainSpec,
) -> Result<Vec<StarShape>, StabilityError> {
    targets
        .iter()
        .map(|&target| {
            if !(target >= 0.0 && target.is_finite()) {
                return Err(StabilityError::Invalid(format!("target distance {target}")));
            }
            let shape = if target == 0.0 {
                base.clone()
            } else {
                family_member(base, mode, target)?
            };
            domain.with_obstacle(shape.clone()).map_err(|e| StabilityError::Unreachable {
                target,
                reason: e.to_string(),
            })?;
            Ok(shape)
        })
        .collect()
}

fn family_member(base: &StarShape, mode: FamilyMode, target: f64) -> Result<StarShape, StabilityError> {
    let unreachable = |reason: String| StabilityError::Unreachable { target, reason };
    let measure = |t: f64| -> Result<(f64, StarShape), StabilityError> {
        let s = mode.apply(base, t).map_err(|e| unreachable(e.to_string()))?;
        Ok((hausdorff_distance(base, &s).distance, s))
    };
    let (d, s) = measure(target)?;
    if (d - target).abs() <= 1e-9 * target.max(1.0) {
        return Ok(s);
    }
    // Bracket: d(lo) < target ≤ d(hi).
    let (mut lo, mut hi) = (0.0, target);
    let mut d_hi = d;
    let mut doublings = 0;
    while d_hi < target {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 40 {
            return Err(unreachable("distance does not grow with the parameter".into()));
        }
        d_hi = measure(hi)?.0;
    }
    let mut best = s;
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let (dm, sm) = measure(mid)?;
        best = sm;
        if (dm - target).abs() <= FAMILY_REL_TOL * target {
            return Ok(best);
        }
        if dm < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let d_best = hausdorff_distance(base, &best).distance;
    if (d_best - target).abs() <= 0.05 * target {
        Ok(best)
    } else {
        Err(unreachable(format!("bisection stalled at d = {d_best}")))
    }
}
