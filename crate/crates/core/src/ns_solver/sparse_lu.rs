//! Sparse LU with a reusable symbolic factorization.

use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMat, SymbolicSparseColMatRef};
use faer::MatMut;

use super::SolverError;

#[derive(Clone, Debug)]
pub struct SymbolicFactor(SymbolicLu<usize>);

impl SymbolicFactor {
    pub fn new(pattern: SymbolicSparseColMatRef<'_, usize>) -> Result<Self, SolverError> {
        SymbolicLu::try_new(pattern)
            .map(SymbolicFactor)
            .map_err(|e| SolverError::Assembly(format!("symbolic factorization: {e:?}")))
    }
}

pub struct SparseLu(Lu<usize, f64>);

impl SparseLu {
    pub fn new(symbolic: &SymbolicFactor, mat: &SparseColMat<usize, f64>) -> Result<Self, SolverError> {
        Lu::try_new_with_symbolic(symbolic.0.clone(), mat.as_ref())
            .map(SparseLu)
            .map_err(|e| SolverError::Singular(format!("{e:?}")))
    }

    pub fn solve_in_place(&self, rhs: MatMut<'_, f64>) {
        self.0.solve_in_place(rhs);
    }
}
