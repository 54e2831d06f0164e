use serde::{Deserialize, Serialize};

use super::{check_labels, ClassifyError};
use crate::dataset::{engineer_features, ExperimentRecord, SplitSpec, Standardizer, ENGINEERED_FEATURE_NAMES};
use crate::numerics::{mean, Matrix};

pub const DEFAULT_THRESHOLD: f64 = 0.5;

/// Largest column mean accepted as "standardized".
const CENTRED_TOL: f64 = 1e-6;

/// `1 / (1 + e^−x)`, evaluated without overflow for either sign.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)`.
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

fn linear(intercept: f64, coefficients: &[f64], row: &[f64]) -> f64 {
    intercept + coefficients.iter().zip(row).map(|(c, v)| c * v).sum::<f64>()
}

/// Mean log-likelihood `(1/n) Σ [y·η − ln(1 + e^η)]`, `η = λ0 + λ·x`.
pub fn log_likelihood(x: &Matrix, y: &[u8], intercept: f64, coefficients: &[f64]) -> f64 {
    x.row_iter()
        .zip(y)
        .map(|(row, &yi)| {
            let eta = linear(intercept, coefficients, row);
            f64::from(yi) * eta - softplus(eta)
        })
        .sum::<f64>()
        / y.len() as f64
}

/// Gradient of [`log_likelihood`]; element 0 is the intercept component.
pub fn log_likelihood_gradient(x: &Matrix, y: &[u8], intercept: f64, coefficients: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; coefficients.len() + 1];
    for (row, &yi) in x.row_iter().zip(y) {
        let r = f64::from(yi) - sigmoid(linear(intercept, coefficients, row));
        g[0] += r;
        for (gj, v) in g[1..].iter_mut().zip(row) {
            *gj += r * v;
        }
    }
    let n = y.len() as f64;
    g.iter_mut().for_each(|v| *v /= n);
    g
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticOptions {
    pub eta: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        Self {
            eta: 0.05,
            max_iter: 50_000,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub eta: f64,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub intercept: f64,
    /// Coefficients on standardized features, in standardizer column order.
    pub coefficients: Vec<f64>,
    pub standardizer: Standardizer,
    pub threshold: f64,
    pub meta: TrainingMeta,
}

impl LogisticModel {
    /// A model from given coefficients (no training).
    pub fn from_coefficients(intercept: f64, coefficients: Vec<f64>, standardizer: Standardizer) -> Self {
        Self {
            intercept,
            coefficients,
            standardizer,
            threshold: DEFAULT_THRESHOLD,
            meta: TrainingMeta {
                eta: 0.0,
                iterations: 0,
                gradient_norm: f64::NAN,
                converged: false,
            },
        }
    }

    pub fn with_threshold(mut self, threshold: f64) -> Result<Self, ClassifyError> {
        if !(threshold > 0.0 && threshold < 1.0) {
            return Err(ClassifyError::InvalidThreshold(threshold));
        }
        self.threshold = threshold;
        Ok(self)
    }

    /// Probability for an already standardized feature row.
    pub fn probability_standardized(&self, z: &[f64]) -> Result<f64, ClassifyError> {
        if z.len() != self.coefficients.len() {
            return Err(ClassifyError::DimensionMismatch {
                expected: self.coefficients.len(),
                found: z.len(),
            });
        }
        Ok(sigmoid(linear(self.intercept, &self.coefficients, z)))
    }

    /// Probability for a raw feature row; it is standardized first.
    pub fn probability_raw(&self, x: &[f64]) -> Result<f64, ClassifyError> {
        let z = self.standardizer.transform_row(x)?;
        self.probability_standardized(&z)
    }

    pub fn classify(&self, probability: f64) -> u8 {
        u8::from(probability >= self.threshold)
    }
}

/// Fits `σ(λ0 + λ·z)` to binary labels by batch gradient ascent on the mean
/// log-likelihood, starting from zero. `z` must already be standardized; the
/// `standardizer` that produced it is stored in the model.
pub fn fit_logistic(
    z: &Matrix,
    y: &[u8],
    standardizer: Standardizer,
    options: LogisticOptions,
) -> Result<LogisticModel, ClassifyError> {
    fit_inner(z, y, standardizer, options, None)
}

/// As [`fit_logistic`], calling `trace(iteration, log_likelihood)` for the
/// starting point and after every update.
pub fn fit_logistic_traced(
    z: &Matrix,
    y: &[u8],
    standardizer: Standardizer,
    options: LogisticOptions,
    mut trace: impl FnMut(usize, f64),
) -> Result<LogisticModel, ClassifyError> {
    fit_inner(z, y, standardizer, options, Some(&mut trace))
}

fn fit_inner(
    z: &Matrix,
    y: &[u8],
    standardizer: Standardizer,
    options: LogisticOptions,
    mut trace: Option<&mut dyn FnMut(usize, f64)>,
) -> Result<LogisticModel, ClassifyError> {
    if z.rows() != y.len() {
        return Err(ClassifyError::LengthMismatch(z.rows(), y.len()));
    }
    if standardizer.len() != z.cols() {
        return Err(ClassifyError::DimensionMismatch {
            expected: z.cols(),
            found: standardizer.len(),
        });
    }
    check_labels(y)?;
    for j in 0..z.cols() {
        let m = mean(&z.column(j));
        if !(m.abs() <= CENTRED_TOL) {
            return Err(ClassifyError::NotStandardized { column: j, mean: m });
        }
    }

    let p = z.cols();
    let mut intercept = 0.0;
    let mut coefficients = vec![0.0; p];
    let mut iterations = 0;
    let mut converged = false;
    let mut grad = log_likelihood_gradient(z, y, intercept, &coefficients);
    if let Some(t) = trace.as_mut() {
        t(0, log_likelihood(z, y, intercept, &coefficients));
    }
    while iterations < options.max_iter {
        if inf_norm(&grad) < options.tol {
            converged = true;
            break;
        }
        intercept += options.eta * grad[0];
        for (c, g) in coefficients.iter_mut().zip(&grad[1..]) {
            *c += options.eta * g;
        }
        iterations += 1;
        if !intercept.is_finite() || coefficients.iter().any(|c| !c.is_finite()) {
            return Err(ClassifyError::Diverged {
                iteration: iterations,
            });
        }
        grad = log_likelihood_gradient(z, y, intercept, &coefficients);
        if let Some(t) = trace.as_mut() {
            t(iterations, log_likelihood(z, y, intercept, &coefficients));
        }
    }
    let gradient_norm = inf_norm(&grad);
    converged |= gradient_norm < options.tol;

    Ok(LogisticModel {
        intercept,
        coefficients,
        standardizer,
        threshold: DEFAULT_THRESHOLD,
        meta: TrainingMeta {
            eta: options.eta,
            iterations,
            gradient_norm,
            converged,
        },
    })
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn check_engineered(model: &LogisticModel) -> Result<(), ClassifyError> {
    let names = model.standardizer.names();
    if names != ENGINEERED_FEATURE_NAMES {
        return Err(ClassifyError::FeatureMismatch {
            expected: names.iter().map(|s| s.to_string()).collect(),
            found: ENGINEERED_FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        });
    }
    Ok(())
}

/// Failure probability of a record: engineer, standardize, then `σ(λ0 + λ·z)`.
pub fn logistic_probability(model: &LogisticModel, record: &ExperimentRecord) -> Result<f64, ClassifyError> {
    check_engineered(model)?;
    model.probability_raw(&engineer_features(record).to_array())
}

/// Class 1 ("infinite failure") iff the probability reaches the threshold.
pub fn logistic_predict(model: &LogisticModel, record: &ExperimentRecord) -> Result<u8, ClassifyError> {
    Ok(model.classify(logistic_probability(model, record)?))
}

/// Persisted form of a logistic model (`"model_type": "logistic"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticDocument {
    pub model_type: String,
    pub features: Vec<String>,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub standardizer: Standardizer,
    pub threshold: f64,
    pub training: TrainingMeta,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitSpec>,
}

impl LogisticDocument {
    pub const MODEL_TYPE: &'static str = "logistic";

    pub fn new(model: &LogisticModel, split: Option<SplitSpec>) -> Self {
        Self {
            model_type: Self::MODEL_TYPE.into(),
            features: model.standardizer.names().iter().map(|s| s.to_string()).collect(),
            intercept: model.intercept,
            coefficients: model.coefficients.clone(),
            standardizer: model.standardizer.clone(),
            threshold: model.threshold,
            training: model.meta,
            split,
        }
    }

    pub fn model(&self) -> LogisticModel {
        LogisticModel {
            intercept: self.intercept,
            coefficients: self.coefficients.clone(),
            standardizer: self.standardizer.clone(),
            threshold: self.threshold,
            meta: self.training,
        }
    }
}
