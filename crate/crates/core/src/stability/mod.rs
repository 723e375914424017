//! Stability experiments: obstacle families at controlled Hausdorff
//! distance, paired forward solves measuring the Cauchy-data discrepancy,
//! fits of the log-log and log stability moduli, and a baseline
//! reconstruction loop.

mod family;
mod fit;
mod morph;
mod pair;
mod reconstruct;

#[cfg(test)]
mod tests;

use std::io::{BufRead, Write};

pub use family::{generate_obstacle_family, FamilyMode};
pub use fit::{fit_points, fit_stability_moduli, spearman, write_fits_csv, ModulusFit, ModulusModel, FITS_CSV_HEADER};
pub use morph::morph_vertices;
pub use pair::{misfit_integral, pair_record, run_pair, solve_obstacle, PairSetup, SolvedObstacle};
pub use reconstruct::{
    add_fourier_noise, nelder_mead, reconstruct_obstacle, shape_parameters, shape_from_parameters, NelderMeadOptions,
    NelderMeadResult, ReconstructionOptions, ReconstructionResult, synthesize_same_mesh,
};

use crate::cauchy::CauchyError;
use crate::geometry::GeometryError;
use crate::meshing::MeshError;
use crate::ns_solver::SolverError;

#[derive(Debug, thiserror::Error)]
pub enum StabilityError {
    #[error("target d = {target} unreachable: {reason}")]
    Unreachable { target: f64, reason: String },
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("insufficient records: {0}")]
    Insufficient(String),
    #[error("degenerate fit: {0}")]
    Degenerate(String),
    #[error("no feasible candidate shape")]
    Infeasible,
    #[error("records file: {0}")]
    Format(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Cauchy(#[from] CauchyError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PairFlag {
    Ok,
    /// A forward solve or measurement failed; excluded from fits.
    Failed,
}

impl PairFlag {
    pub fn name(self) -> &'static str {
        match self {
            PairFlag::Ok => "ok",
            PairFlag::Failed => "failed",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentRecord {
    pub pair_id: String,
    pub d_hausdorff: f64,
    pub epsilon: f64,
    /// `∫_{D₂∖D₁}|∇u₁|²`
    pub grad_misfit_1: f64,
    /// `∫_{D₁∖D₂}|∇u₂|²`
    pub grad_misfit_2: f64,
    /// Mesh size of the first problem.
    pub mesh_h: f64,
    /// Newton iterations of both solves.
    pub newton_iters: usize,
    pub seed: u64,
    /// Transversal crossings of the two obstacle boundaries.
    pub crossings: usize,
    /// Smallest angle between the boundaries at a crossing.
    pub crossing_angle: Option<f64>,
    /// Patch radius of the union boundary when it is one of the two
    /// curves (no crossings).
    pub intersection_rho0: Option<f64>,
    pub flag: PairFlag,
}

impl ExperimentRecord {
    pub fn failed(pair_id: &str, d_hausdorff: f64, mesh_h: f64, seed: u64) -> Self {
        ExperimentRecord {
            pair_id: pair_id.to_string(),
            d_hausdorff,
            epsilon: f64::NAN,
            grad_misfit_1: f64::NAN,
            grad_misfit_2: f64::NAN,
            mesh_h,
            newton_iters: 0,
            seed,
            crossings: 0,
            crossing_angle: None,
            intersection_rho0: None,
            flag: PairFlag::Failed,
        }
    }
}

pub const RECORDS_CSV_HEADER: &str = "pair_id,d_hausdorff,epsilon,grad_misfit_1,grad_misfit_2,mesh_h,newton_iters,seed,crossings,crossing_angle,intersection_rho0,flag";

fn num(x: f64) -> String {
    format!("{x:.14e}")
}

pub fn record_csv_line(r: &ExperimentRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{}",
        r.pair_id,
        num(r.d_hausdorff),
        num(r.epsilon),
        num(r.grad_misfit_1),
        num(r.grad_misfit_2),
        num(r.mesh_h),
        r.newton_iters,
        r.seed,
        r.crossings,
        r.crossing_angle.map(num).unwrap_or_default(),
        r.intersection_rho0.map(num).unwrap_or_default(),
        r.flag.name()
    )
}

pub fn write_records_csv(records: &[ExperimentRecord], w: &mut dyn Write) -> Result<(), StabilityError> {
    writeln!(w, "{RECORDS_CSV_HEADER}")?;
    for r in records {
        writeln!(w, "{}", record_csv_line(r))?;
    }
    Ok(())
}

/// Reads records written by [`write_records_csv`]; `#` lines are skipped.
pub fn read_records_csv(r: &mut dyn BufRead) -> Result<Vec<ExperimentRecord>, StabilityError> {
    let mut out = Vec::new();
    let mut header_seen = false;
    for line in r.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            if line != RECORDS_CSV_HEADER {
                return Err(StabilityError::Format(format!("unexpected header `{line}`")));
            }
            header_seen = true;
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 12 {
            return Err(StabilityError::Format(format!("expected 12 fields in `{line}`")));
        }
        let real = |s: &str| s.parse::<f64>().map_err(|_| StabilityError::Format(format!("bad number `{s}`")));
        let int = |s: &str| s.parse::<u64>().map_err(|_| StabilityError::Format(format!("bad integer `{s}`")));
        let opt = |s: &str| if s.is_empty() { Ok(None) } else { real(s).map(Some) };
        out.push(ExperimentRecord {
            pair_id: f[0].to_string(),
            d_hausdorff: real(f[1])?,
            epsilon: real(f[2])?,
            grad_misfit_1: real(f[3])?,
            grad_misfit_2: real(f[4])?,
            mesh_h: real(f[5])?,
            newton_iters: int(f[6])? as usize,
            seed: int(f[7])?,
            crossings: int(f[8])? as usize,
            crossing_angle: opt(f[9])?,
            intersection_rho0: opt(f[10])?,
            flag: match f[11] {
                "ok" => PairFlag::Ok,
                "failed" => PairFlag::Failed,
                other => return Err(StabilityError::Format(format!("flag `{other}`"))),
            },
        });
    }
    if !header_seen {
        return Err(StabilityError::Format("missing header".into()));
    }
    Ok(out)
}
