//! Experiment tables: ingestion, validation, feature engineering,
//! standardization, correlation analysis, partitioning and the synthetic
//! stand-in generator.

mod correlation;
mod csvio;
mod filter;
pub(crate) mod record;
mod split;
mod standardize;
mod synth;

pub use correlation::{correlation_matrix, LabeledMatrix, CORRELATION_COLUMNS};
pub use csvio::{load_experiments, read_experiments, write_experiments, CSV_COLUMNS};
pub use filter::RecordFilter;
pub use record::{
    engineer_features, resolve_column, EngineeredFeatures, ExperimentRecord, Layout, Soil,
    ENGINEERED_FEATURE_NAMES, INTERVALS, NUMERIC_COLUMNS,
};
pub use split::{kfold_partition, split_train_test, test_count, SplitSpec};
pub use standardize::{standardize, ColumnScale, Standardizer};
pub use synth::{synth_generate, synth_generate_with, PlantedRules, SoilSpec, SynthDesign, WevBySoil};

use thiserror::Error;

use crate::numerics::{Matrix, NumericsError};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("missing column '{0}'")]
    MissingColumn(String),
    #[error("row {row}, column '{column}': {reason}")]
    BadValue {
        row: usize,
        column: String,
        reason: String,
    },
    #[error("row {row}: layout {found} does not match expected {expected}")]
    LayoutMismatch {
        row: usize,
        expected: Layout,
        found: Layout,
    },
    #[error("column '{0}' is constant (zero variance)")]
    ConstantColumn(String),
    #[error("unknown column '{0}'")]
    UnknownColumn(String),
    #[error("row {row}: column '{column}' has no value")]
    MissingValue { row: usize, column: String },
    #[error("degenerate split: {0}")]
    DegenerateSplit(String),
    #[error("bad fold count: k={k} for n={n} (need 2 <= k <= n)")]
    BadFoldCount { n: usize, k: usize },
    #[error("bad design: {0}")]
    BadDesign(String),
    #[error("need at least {needed} rows, got {found}")]
    TooFewRows { needed: usize, found: usize },
    #[error("bad filter '{0}' (expected column=value)")]
    BadFilter(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Ordered experiment records plus a note on where they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentTable {
    pub records: Vec<ExperimentRecord>,
    pub provenance: String,
}

impl ExperimentTable {
    pub fn new(records: Vec<ExperimentRecord>, provenance: impl Into<String>) -> Self {
        Self {
            records,
            provenance: provenance.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Rows at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
            provenance: self.provenance.clone(),
        }
    }

    pub fn with_layout(&self, layout: Layout) -> Self {
        self.filtered(|r| r.layout == layout)
    }

    pub fn filtered(&self, keep: impl Fn(&ExperimentRecord) -> bool) -> Self {
        Self {
            records: self.records.iter().filter(|r| keep(r)).cloned().collect(),
            provenance: self.provenance.clone(),
        }
    }

    /// All values of one numeric column; any absent value is an error.
    pub fn column(&self, name: &str) -> Result<Vec<f64>, DatasetError> {
        let canonical = resolve_column(name)?;
        self.records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.value(canonical)?.ok_or_else(|| DatasetError::MissingValue {
                    row: i + 1,
                    column: canonical.to_string(),
                })
            })
            .collect()
    }

    /// `n × columns.len()` matrix of the selected columns.
    pub fn matrix<S: AsRef<str>>(&self, columns: &[S]) -> Result<Matrix, DatasetError> {
        let cols = columns
            .iter()
            .map(|c| self.column(c.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        if cols.is_empty() {
            return Ok(Matrix::zeros(self.len(), 0));
        }
        Ok(Matrix::from_columns(&cols)?)
    }

    /// `n × 3` matrix of the engineered products.
    pub fn engineered_matrix(&self) -> Matrix {
        let mut m = Matrix::zeros(self.len(), 3);
        for (i, r) in self.records.iter().enumerate() {
            for (j, v) in engineer_features(r).to_array().into_iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Failure labels; every record must carry one.
    pub fn labels(&self) -> Result<Vec<u8>, DatasetError> {
        self.records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.failure.ok_or_else(|| DatasetError::MissingValue {
                    row: i + 1,
                    column: "failure".into(),
                })
            })
            .collect()
    }
}
