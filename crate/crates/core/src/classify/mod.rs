//! Failure classification: logistic regression by gradient ascent, a
//! soft-margin linear SVC and confusion-matrix scores.

mod logistic;
mod metrics;
mod svc;

pub use logistic::{
    fit_logistic, fit_logistic_traced, log_likelihood, log_likelihood_gradient,
    logistic_predict, logistic_probability, sigmoid, LogisticDocument, LogisticModel,
    LogisticOptions, TrainingMeta, DEFAULT_THRESHOLD,
};
pub use metrics::{confusion, metrics, ConfusionMatrix, Metrics, Score};
pub use svc::{
    fit_svc, fit_svc_with, svc_decision, svc_predict, svc_primal_objective, SvcModel, SvcOptions, SV_TOL,
};

use thiserror::Error;

use crate::numerics::NumericsError;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("labels contain a single class; both 0 and 1 are required")]
    NoClassVariation,
    #[error("gradient ascent diverged at iteration {iteration} (non-finite coefficients)")]
    Diverged { iteration: usize },
    #[error("solver did not converge in {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("regularization C must be positive and finite, got {0}")]
    InvalidC(f64),
    #[error("threshold must lie in (0, 1), got {0}")]
    InvalidThreshold(f64),
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("feature mismatch: model expects {expected:?}, got {found:?}")]
    FeatureMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("label {label} at position {index} is not 0 or 1")]
    LabelOutOfRange { index: usize, label: u8 },
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("feature column {column} is not standardized (mean {mean})")]
    NotStandardized { column: usize, mean: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Checks labels are binary and both classes occur.
fn check_labels(y: &[u8]) -> Result<(), ClassifyError> {
    if let Some((index, &label)) = y.iter().enumerate().find(|(_, &l)| l > 1) {
        return Err(ClassifyError::LabelOutOfRange { index, label });
    }
    if y.is_empty() || y.iter().all(|&l| l == y[0]) {
        return Err(ClassifyError::NoClassVariation);
    }
    Ok(())
}
