//! Multiple linear regression `y = λ0 + λ1·x1 + λ2·x2 + λ3·x3` on the raw
//! rain-gated products, with R², MSE and MAE.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{EngineeredFeatures, SplitSpec, ENGINEERED_FEATURE_NAMES};
use crate::numerics::{mean, solve_spd, Matrix, NumericsError};

/// Relative Cholesky pivots below this are treated as exact collinearity.
const EXACT_COLLINEARITY: f64 = 1e-14;
/// Relative ridge added to the normal-matrix diagonal on the single retry.
const RIDGE: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum RegressionError {
    #[error("need at least {needed} rows, got {found}")]
    TooFewRows { needed: usize, found: usize },
    #[error("design matrix is singular (collinear features)")]
    SingularDesign,
    #[error("feature mismatch: model expects {expected:?}, got {found:?}")]
    FeatureMismatch {
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("target is constant; R² is undefined")]
    ConstantTarget,
    #[error("no values")]
    Empty,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub feature_names: Vec<String>,
    pub target: String,
    /// Always false for models from [`fit_mlr`], which work in raw units.
    pub standardized: bool,
}

impl LinearModel {
    /// `λ0 + Σ λj·xj`.
    pub fn predict_row(&self, x: &[f64]) -> Result<f64, RegressionError> {
        if x.len() != self.coefficients.len() {
            return Err(RegressionError::LengthMismatch(
                self.coefficients.len(),
                x.len(),
            ));
        }
        Ok(self.intercept
            + self
                .coefficients
                .iter()
                .zip(x)
                .map(|(l, v)| l * v)
                .sum::<f64>())
    }

    pub fn predict_matrix(&self, x: &Matrix) -> Result<Vec<f64>, RegressionError> {
        x.row_iter().map(|r| self.predict_row(r)).collect()
    }
}

/// Ordinary least squares via the normal equations.
///
/// Columns are centred and scaled to unit root-mean-square before the normal
/// matrix is formed; coefficients are mapped back to raw units. If Cholesky
/// hits a tiny but non-negligible pivot, one retry with a relative ridge of
/// `1e-10` on the diagonal is made. Exactly collinear designs (including a
/// constant feature, which duplicates the intercept) fail with
/// [`RegressionError::SingularDesign`].
pub fn fit_mlr<S: AsRef<str>>(
    x: &Matrix,
    y: &[f64],
    feature_names: &[S],
    target: &str,
) -> Result<LinearModel, RegressionError> {
    let (n, p) = (x.rows(), x.cols());
    if y.len() != n {
        return Err(RegressionError::LengthMismatch(n, y.len()));
    }
    if feature_names.len() != p {
        return Err(RegressionError::LengthMismatch(p, feature_names.len()));
    }
    if n < p + 1 {
        return Err(RegressionError::TooFewRows {
            needed: p + 1,
            found: n,
        });
    }

    let means: Vec<f64> = (0..p).map(|j| mean(&x.column(j))).collect();
    let mut scales = Vec::with_capacity(p);
    for (j, m) in means.iter().enumerate() {
        let rms = (x.column(j).iter().map(|v| (v - m).powi(2)).sum::<f64>() / n as f64).sqrt();
        if !(rms > 0.0) {
            return Err(RegressionError::SingularDesign);
        }
        scales.push(rms);
    }
    let mut z = Matrix::zeros(n, p);
    for i in 0..n {
        for j in 0..p {
            z[(i, j)] = (x[(i, j)] - means[j]) / scales[j];
        }
    }
    let y_mean = mean(y);
    let yc: Vec<f64> = y.iter().map(|v| v - y_mean).collect();

    let zt = z.transpose();
    let normal = zt.matmul(&z)?;
    let rhs = zt.matvec(&yc)?;

    let beta = match solve_spd(&normal, &rhs) {
        Ok(b) => b,
        Err(NumericsError::SingularMatrix { relative_pivot, .. })
            if relative_pivot.is_finite() && relative_pivot.abs() >= EXACT_COLLINEARITY =>
        {
            let mut ridged = normal.clone();
            for j in 0..p {
                ridged[(j, j)] *= 1.0 + RIDGE;
            }
            solve_spd(&ridged, &rhs).map_err(|_| RegressionError::SingularDesign)?
        }
        Err(NumericsError::SingularMatrix { .. }) => return Err(RegressionError::SingularDesign),
        Err(e) => return Err(e.into()),
    };

    let coefficients: Vec<f64> = beta.iter().zip(&scales).map(|(b, s)| b / s).collect();
    let intercept = y_mean
        - coefficients
            .iter()
            .zip(&means)
            .map(|(c, m)| c * m)
            .sum::<f64>();
    if !intercept.is_finite() || coefficients.iter().any(|c| !c.is_finite()) {
        return Err(RegressionError::SingularDesign);
    }
    Ok(LinearModel {
        intercept,
        coefficients,
        feature_names: feature_names.iter().map(|s| s.as_ref().to_string()).collect(),
        target: target.to_string(),
        standardized: false,
    })
}

/// Scores one set of rain-gated products. The model must have been fit on
/// exactly `x1, x2, x3`.
pub fn predict_mlr(model: &LinearModel, features: &EngineeredFeatures) -> Result<f64, RegressionError> {
    if model.feature_names != ENGINEERED_FEATURE_NAMES {
        return Err(RegressionError::FeatureMismatch {
            expected: model.feature_names.clone(),
            found: ENGINEERED_FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        });
    }
    model.predict_row(&features.to_array())
}

fn check_pair(actual: &[f64], predicted: &[f64], min_len: usize) -> Result<(), RegressionError> {
    if actual.len() != predicted.len() {
        return Err(RegressionError::LengthMismatch(actual.len(), predicted.len()));
    }
    if actual.len() < min_len {
        return Err(RegressionError::Empty);
    }
    Ok(())
}

/// Coefficient of determination `1 − SS_res / SS_tot`.
pub fn r2(actual: &[f64], predicted: &[f64]) -> Result<f64, RegressionError> {
    check_pair(actual, predicted, 2)?;
    if actual.windows(2).all(|w| w[0] == w[1]) {
        return Err(RegressionError::ConstantTarget);
    }
    let m = mean(actual);
    let ss_tot: f64 = actual.iter().map(|y| (y - m).powi(2)).sum();
    let ss_res: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(y, p)| (y - p).powi(2))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

pub fn mse(actual: &[f64], predicted: &[f64]) -> Result<f64, RegressionError> {
    check_pair(actual, predicted, 1)?;
    Ok(actual
        .iter()
        .zip(predicted)
        .map(|(y, p)| (y - p).powi(2))
        .sum::<f64>()
        / actual.len() as f64)
}

pub fn mae(actual: &[f64], predicted: &[f64]) -> Result<f64, RegressionError> {
    check_pair(actual, predicted, 1)?;
    Ok(actual
        .iter()
        .zip(predicted)
        .map(|(y, p)| (y - p).abs())
        .sum::<f64>()
        / actual.len() as f64)
}

/// Persisted form of a fitted regression (`"model_type": "mlr"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlrDocument {
    pub model_type: String,
    pub target: String,
    pub features: Vec<String>,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub standardized: bool,
    pub train_r2: f64,
    pub train_mse: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitSpec>,
}

impl MlrDocument {
    pub const MODEL_TYPE: &'static str = "mlr";

    pub fn new(model: &LinearModel, train_r2: f64, train_mse: f64, split: Option<SplitSpec>) -> Self {
        Self {
            model_type: Self::MODEL_TYPE.into(),
            target: model.target.clone(),
            features: model.feature_names.clone(),
            intercept: model.intercept,
            coefficients: model.coefficients.clone(),
            standardized: model.standardized,
            train_r2,
            train_mse,
            split,
        }
    }

    pub fn model(&self) -> LinearModel {
        LinearModel {
            intercept: self.intercept,
            coefficients: self.coefficients.clone(),
            feature_names: self.features.clone(),
            target: self.target.clone(),
            standardized: self.standardized,
        }
    }
}
