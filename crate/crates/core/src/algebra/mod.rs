//! Exact linear algebra over Q or Z/p, the Leray reduction, and
//! conjugacy-class invariants.

mod leray;
mod matrix;
mod poly;
mod scalar;
pub mod sparse;

pub use leray::{
    conjugacy_invariants, generalized_kernel, lefschetz_numbers, leray_block, leray_reduce, LefschetzNumbers,
    LerayReduced,
};
pub use matrix::{solve_linear, GradedMatrix, LinearSolution, Matrix, MatrixJson};
pub use poly::{invariant_factors, Poly};
pub use scalar::{is_prime, Field, Rat, Scalar};
pub use sparse::{ColumnReduction, SparseVec};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("{0} is not prime")]
    NotPrime(u32),
    #[error("cannot parse scalar or matrix: {0}")]
    Parse(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("block in degree {degree} is {rows}x{cols}, expected square")]
    NotSquare { degree: i32, rows: usize, cols: usize },
    #[error("block in degree {degree} is singular; apply the Leray reduction first")]
    Singular { degree: i32 },
    #[error("Lefschetz numbers need rational coefficients (field has characteristic {0}); traces mod p do not count fixed points")]
    LefschetzNeedsRationals(u32),
}
