//! Principal component analysis and K-means clustering.

mod kmeans;
mod pca;

pub use kmeans::{
    align_clusters_to_labels, kmeans, write_cluster_csv, Alignment, KMeansResult, DEFAULT_RESTARTS,
};
pub use pca::{
    check_loadings, cumulative_ratios, explained_variance_report, fit_pca, fit_pca_matrix,
    LoadingCheck, PcaModel, VarianceRow, PCA_COLUMNS,
};

use thiserror::Error;

use crate::dataset::DatasetError;
use crate::numerics::NumericsError;

#[derive(Debug, Error)]
pub enum UnsupervisedError {
    #[error("column '{0}' is constant (zero variance)")]
    ConstantColumn(String),
    #[error("need at least {needed} rows, got {found}")]
    TooFewRows { needed: usize, found: usize },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("k={k} is invalid for {n} points (need 1 <= k <= n)")]
    BadK { k: usize, n: usize },
    #[error("restarts must be at least 1")]
    BadRestarts,
    #[error("no points to cluster")]
    EmptyInput,
    #[error("value {value} at position {index} is not 0 or 1")]
    NotBinary { index: usize, value: usize },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error(transparent)]
    Dataset(DatasetError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl From<DatasetError> for UnsupervisedError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::ConstantColumn(c) => Self::ConstantColumn(c),
            DatasetError::TooFewRows { needed, found } => Self::TooFewRows { needed, found },
            other => Self::Dataset(other),
        }
    }
}
