//! Empirical checks of the quantitative unique-continuation inequalities on
//! computed flows: three spheres (for `u`, `∇u` and differences), Caccioppoli,
//! Poincaré, the sup-norm interpolation bound and Lipschitz propagation of
//! smallness.
//!
//! Constants are fitted from the data, never taken as known. Every check
//! returns an [`InequalityRecord`]; the meaning of its numeric slots per
//! kind is listed on [`InequalityKind`].

mod ball;
mod chain;
mod checks;
mod linearized;

#[cfg(test)]
mod tests;

use std::fmt;
use std::io::{BufRead, Write};

use crate::geometry::Point;

pub use ball::{
    ball_integral, ball_l2, ball_quadrature, check_ball, visit_ball, BallField, BallIntegral, Clearance,
    FieldDifference, Integrand, BALL_QUADRATURE_TOL,
};
pub use chain::{chain_of_balls, BallChain};
pub use checks::{
    caccioppoli_ratio, delta_grid, difference_three_spheres_check, fit_common_delta, gradient_three_spheres_check,
    interpolation_check, minimal_c, poincare_ratio, pos_boundary_version, pos_profile, random_triples,
    three_spheres_check, BallTriple, CommonFit, PosProfile, DEFAULT_RATIOS, DEFAULT_S, THETA_STAR,
};
pub use linearized::{difference_residual, linearized_coefficients, DifferenceResidual, LinearizedCoefficients};

#[derive(Debug, thiserror::Error)]
pub enum ContinuationError {
    #[error("ball B({radius}) at {center:?} leaves the domain (clearance {clearance})")]
    BallOutsideDomain { center: Point, radius: f64, clearance: f64 },
    #[error("ball quadrature not resolved: relative change {relative_error:e} under the doubled rule")]
    Quadrature { relative_error: f64 },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("degenerate data: {0}")]
    Degenerate(String),
    #[error("no admissible centers for rho = {rho}")]
    EmptyErosion { rho: f64 },
    #[error("fields live on different meshes")]
    MeshMismatch,
    #[error("corridor clearance {clearance} below {required} at {at:?}")]
    Clearance { at: Point, clearance: f64, required: f64 },
    #[error("record file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Which inequality a record describes.
///
/// Slot usage (`r*`, `n*`, `delta`, `c`):
/// - three-spheres kinds: radii, `Nᵢ = ∫_{B_{rᵢ}}`, fitted or supplied δ,
///   minimal C at that δ;
/// - `Caccioppoli`: `r1 = r`, `r3 = R`, `n1 = ∫_{B_r}|∇u|²`,
///   `n3 = ∫_{B_R}|u|²`, `c` the ratio;
/// - `Poincare`: `r1 = ρ₀`, `n1 = ‖u‖²`, `n2 = ‖∇u‖²`, `c` the ratio;
/// - `Interpolation`: `r1 = t`, `n1 = ∫|v|²`, `n2 = ‖v‖_∞`, `n3 = ‖∇v‖_∞`,
///   `c` the minimal constant;
/// - `PosProfile`: `r1 = ρ`, `n1` the minimal ball energy, `n3` its
///   normalizer, `c = C_ρ`, center the minimizing center.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InequalityKind {
    ThreeSpheres,
    ThreeSpheresGrad,
    ThreeSpheresDiff,
    Caccioppoli,
    Poincare,
    Interpolation,
    PosProfile,
}

impl InequalityKind {
    pub const ALL: [InequalityKind; 7] = [
        InequalityKind::ThreeSpheres,
        InequalityKind::ThreeSpheresGrad,
        InequalityKind::ThreeSpheresDiff,
        InequalityKind::Caccioppoli,
        InequalityKind::Poincare,
        InequalityKind::Interpolation,
        InequalityKind::PosProfile,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InequalityKind::ThreeSpheres => "THREE_SPHERES",
            InequalityKind::ThreeSpheresGrad => "THREE_SPHERES_GRAD",
            InequalityKind::ThreeSpheresDiff => "THREE_SPHERES_DIFF",
            InequalityKind::Caccioppoli => "CACCIOPPOLI",
            InequalityKind::Poincare => "POINCARE",
            InequalityKind::Interpolation => "INTERPOLATION",
            InequalityKind::PosProfile => "POS_PROFILE",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

impl fmt::Display for InequalityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RecordFlag {
    /// The inequality holds with the recorded constants.
    Holds,
    /// Supplied constants are too small for this sample.
    Violated,
    /// All measured quantities vanish.
    Trivial,
    /// `N₁ = 0` while `N₂ > 0`: the inner ball sees nothing although the
    /// middle one does.
    Unverifiable,
    /// Zero normalizer with nonzero numerator.
    Degenerate,
    /// The ball configuration leaves the domain or is invalid; no values.
    OutsideDomain,
}

impl RecordFlag {
    pub fn name(self) -> &'static str {
        match self {
            RecordFlag::Holds => "holds",
            RecordFlag::Violated => "violated",
            RecordFlag::Trivial => "trivial",
            RecordFlag::Unverifiable => "unverifiable",
            RecordFlag::Degenerate => "degenerate",
            RecordFlag::OutsideDomain => "outside_domain",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            RecordFlag::Holds,
            RecordFlag::Violated,
            RecordFlag::Trivial,
            RecordFlag::Unverifiable,
            RecordFlag::Degenerate,
            RecordFlag::OutsideDomain,
        ]
        .into_iter()
        .find(|f| f.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InequalityRecord {
    pub kind: InequalityKind,
    pub center: Option<Point>,
    pub r: [Option<f64>; 3],
    pub n: [Option<f64>; 3],
    pub delta: Option<f64>,
    pub c: f64,
    pub flag: RecordFlag,
}

impl InequalityRecord {
    pub fn new(kind: InequalityKind) -> Self {
        InequalityRecord {
            kind,
            center: None,
            r: [None; 3],
            n: [None; 3],
            delta: None,
            c: 0.0,
            flag: RecordFlag::Holds,
        }
    }
}

pub const RECORD_CSV_HEADER: &str = "kind,center_x,center_y,r1,r2,r3,N1,N2,N3,delta_fit,C_fit,flag";

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.14e}")).unwrap_or_default()
}

pub fn write_records_csv(records: &[InequalityRecord], w: &mut dyn Write) -> Result<(), ContinuationError> {
    writeln!(w, "{RECORD_CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{:.14e},{}",
            r.kind,
            opt(r.center.map(|p| p.x)),
            opt(r.center.map(|p| p.y)),
            opt(r.r[0]),
            opt(r.r[1]),
            opt(r.r[2]),
            opt(r.n[0]),
            opt(r.n[1]),
            opt(r.n[2]),
            opt(r.delta),
            r.c,
            r.flag.name()
        )?;
    }
    Ok(())
}

pub fn read_records_csv(r: &mut dyn BufRead) -> Result<Vec<InequalityRecord>, ContinuationError> {
    let mut lines = r.lines();
    let header = lines.next().transpose()?.unwrap_or_default();
    if header.trim() != RECORD_CSV_HEADER {
        return Err(ContinuationError::Format(format!("unexpected header `{header}`")));
    }
    let num = |s: &str| -> Result<Option<f64>, ContinuationError> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|_| ContinuationError::Format(format!("bad number `{s}`")))
        }
    };
    let mut out = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 12 {
            return Err(ContinuationError::Format(format!("expected 12 fields in `{line}`")));
        }
        let kind = InequalityKind::parse(f[0]).ok_or_else(|| ContinuationError::Format(format!("kind `{}`", f[0])))?;
        let center = match (num(f[1])?, num(f[2])?) {
            (Some(x), Some(y)) => Some(Point::new(x, y)),
            _ => None,
        };
        out.push(InequalityRecord {
            kind,
            center,
            r: [num(f[3])?, num(f[4])?, num(f[5])?],
            n: [num(f[6])?, num(f[7])?, num(f[8])?],
            delta: num(f[9])?,
            c: num(f[10])?.ok_or_else(|| ContinuationError::Format("missing C_fit".into()))?,
            flag: RecordFlag::parse(f[11]).ok_or_else(|| ContinuationError::Format(format!("flag `{}`", f[11])))?,
        });
    }
    Ok(out)
}
