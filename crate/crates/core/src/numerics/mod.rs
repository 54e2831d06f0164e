//! Dense linear algebra, descriptive statistics and the seeded PRNG shared by
//! every other module. Everything here is a pure function of its inputs.

mod linalg;
mod matrix;
mod rng;
mod stats;

pub use linalg::{
    canonical_sign, eigh_sym, solve_linear, solve_spd, EigenDecomposition, JACOBI_MAX_SWEEPS, JACOBI_TOL,
    PIVOT_TOL, SYMMETRY_TOL,
};
pub use matrix::{dot, norm, Matrix};
pub use rng::{derive_seed, seeded_shuffle, SplitMix64};
pub use stats::{mean, mean_std, pearson_corr, sample_std};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },
    #[error("singular or indefinite matrix at pivot {index} (relative pivot {relative_pivot:e})")]
    SingularMatrix { index: usize, relative_pivot: f64 },
    #[error("no convergence after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("constant column (zero variance)")]
    ConstantColumn,
    #[error("need at least {needed} values, got {found}")]
    TooFewValues { needed: usize, found: usize },
}
