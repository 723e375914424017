//! Stationary Navier–Stokes and Stokes solver (Taylor–Hood P2/P1) with
//! diagnostics.

mod boundary;
mod diagnostics;
mod fem;
mod field;
mod io;
mod solver;
mod sparse_lu;


pub use boundary::{BoundaryData, BumpProfile};
pub use diagnostics::{
    c1alpha_norm_estimate, check_small_data_uniqueness, check_uniqueness_with_force, energy_identity_residual,
    energy_identity_sides, inf_sup_constant, Region, UniquenessOptions, UniquenessReport, UniquenessVerdict,
    HOLDER_SAMPLES,
};
pub use fem::{p2_gradients, p2_values, P2Space, TriangleGeom};
pub use field::{grad_norm2, FlowField, Grad2, PointValue, Vec2};
pub use io::{read_field, write_field};
pub use solver::{solve_navier_stokes, solve_stokes, ForceFn, Layout, NewtonTrace, NsSolver, SolverOptions};

#[derive(Debug, thiserror::Error)]
pub enum SolverError {
    #[error("singular system: {0}")]
    Singular(String),
    #[error("Newton did not converge; residual history {residuals:?}")]
    NonConvergence { residuals: Vec<f64> },
    #[error("invalid input: {0}")]
    InvalidData(String),
    #[error("assembly failed: {0}")]
    Assembly(String),
    #[error("field file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
