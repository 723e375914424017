use super::ball::Clearance;
use super::ContinuationError;
use crate::geometry::Point;

#[derive(Clone, Debug, PartialEq)]
pub struct BallChain {
    pub centers: Vec<Point>,
    pub rho3: f64,
    /// `S / (ρ₀/ρ₃)²`.
    pub measured_c: f64,
    /// Whether all pairs of centers are at least `ρ₃/2` apart, i.e. the
    /// balls `B_{ρ₃/4}(xᵢ)` are pairwise disjoint.
    pub separated: bool,
}

/// Samples per corridor segment for the clearance check.
const CLEARANCE_SAMPLES: usize = 16;

/// Walks the polyline from its first point `x₀`, placing each new center on
/// the corridor at distance exactly `ρ₃/2` from the previous one, and stops
/// once the last center is within `ρ₃/2` of the corridor end. The anchor
/// `x₀` is itself a center only when the end is already within reach.
pub fn chain_of_balls(
    corridor: &[Point],
    rho3: f64,
    rho0: f64,
    clearance: Option<&dyn Clearance>,
) -> Result<BallChain, ContinuationError> {
    if corridor.is_empty() || !(rho3 > 0.0 && rho0 > 0.0) {
        return Err(ContinuationError::Invalid(format!(
            "corridor of {} points, rho3 = {rho3}, rho0 = {rho0}",
            corridor.len()
        )));
    }
    if let Some(cl) = clearance {
        let seg = corridor.windows(2).flat_map(|w| {
            (0..CLEARANCE_SAMPLES).map(move |k| w[0].lerp(w[1], k as f64 / CLEARANCE_SAMPLES as f64))
        });
        for p in seg.chain(corridor.last().copied()) {
            let c = cl.clearance(p);
            if c < rho3 * (1.0 - 1e-9) {
                return Err(ContinuationError::Clearance { at: p, clearance: c, required: rho3 });
            }
        }
    }
    let end = *corridor.last().expect("nonempty");
    let step = 0.5 * rho3;
    let mut centers = vec![corridor[0]];
    let anchored = corridor[0].distance(end) > step;
    // Current position: segment index and parameter on it.
    let (mut seg, mut t) = (0usize, 0.0f64);
    while centers.last().expect("nonempty").distance(end) > step {
        let x = *centers.last().expect("nonempty");
        let mut next = None;
        while seg + 1 < corridor.len() {
            let (a, b) = (corridor[seg], corridor[seg + 1]);
            // First s ≥ t on this segment with |a + s(b−a) − x| = step.
            let d = b - a;
            let f = a - x;
            let qa = d.norm_squared();
            if qa > 0.0 {
                let qb = 2.0 * f.dot(d);
                let qc = f.norm_squared() - step * step;
                let disc = qb * qb - 4.0 * qa * qc;
                if disc >= 0.0 {
                    let s = (-qb + disc.sqrt()) / (2.0 * qa);
                    if s >= t && s <= 1.0 {
                        t = s;
                        next = Some(a + d * s);
                        break;
                    }
                }
            }
            seg += 1;
            t = 0.0;
        }
        match next {
            Some(p) => centers.push(p),
            // Corridor exhausted before the end rule was met.
            None => break,
        }
    }
    if anchored && centers.len() > 1 {
        centers.remove(0);
    }
    let separated = centers
        .iter()
        .enumerate()
        .all(|(i, p)| centers[i + 1..].iter().all(|q| p.distance(*q) >= step * (1.0 - 1e-9)));
    let measured_c = centers.len() as f64 / (rho0 / rho3).powi(2);
    Ok(BallChain { centers, rho3, measured_c, separated })
}
