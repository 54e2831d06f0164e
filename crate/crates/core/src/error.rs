use std::path::PathBuf;

use thiserror::Error;

use crate::classify::ClassifyError;
use crate::dataset::DatasetError;
use crate::numerics::NumericsError;
use crate::regression::RegressionError;
use crate::sensitivity::SensitivityError;
use crate::unsupervised::UnsupervisedError;
use crate::validation::ValidationError;

/// Any failure surfaced by the command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{0}")]
    Usage(String),
    #[error("missing artifact: {}", .0.display())]
    MissingArtifact(PathBuf),
    #[error("{}: {message}", path.display())]
    BadArtifact { path: PathBuf, message: String },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Regression(#[from] RegressionError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Unsupervised(#[from] UnsupervisedError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error(transparent)]
    Sensitivity(#[from] SensitivityError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

fn numerics_code(e: &NumericsError) -> i32 {
    match e {
        NumericsError::SingularMatrix { .. } | NumericsError::NoConvergence { .. } => EXIT_NUMERIC,
        _ => EXIT_DATA,
    }
}

fn classify_code(e: &ClassifyError) -> i32 {
    match e {
        ClassifyError::Diverged { .. } | ClassifyError::NoConvergence { .. } => EXIT_NUMERIC,
        ClassifyError::Numerics(n) => numerics_code(n),
        _ => EXIT_DATA,
    }
}

fn unsupervised_code(e: &UnsupervisedError) -> i32 {
    match e {
        UnsupervisedError::Numerics(n) => numerics_code(n),
        UnsupervisedError::Dataset(DatasetError::Numerics(n)) => numerics_code(n),
        _ => EXIT_DATA,
    }
}

fn validation_code(e: &ValidationError) -> i32 {
    match e {
        ValidationError::Fold { source, .. } => validation_code(source),
        ValidationError::Classify(c) => classify_code(c),
        ValidationError::Unsupervised(u) => unsupervised_code(u),
        ValidationError::Numerics(n) => numerics_code(n),
        _ => EXIT_DATA,
    }
}

impl Error {
    /// 1 usage, 2 data or validation, 3 numeric failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Dataset(DatasetError::BadFilter(_)) => EXIT_USAGE,
            Error::Regression(RegressionError::SingularDesign) => EXIT_NUMERIC,
            Error::Regression(RegressionError::Numerics(n)) => numerics_code(n),
            Error::Classify(c) => classify_code(c),
            Error::Unsupervised(u) => unsupervised_code(u),
            Error::Validation(v) => validation_code(v),
            Error::Sensitivity(SensitivityError::Classify(c)) => classify_code(c),
            Error::Sensitivity(SensitivityError::Numerics(n)) => numerics_code(n),
            Error::Numerics(n) => numerics_code(n),
            Error::Dataset(DatasetError::Numerics(n)) => numerics_code(n),
            _ => EXIT_DATA,
        }
    }
}
