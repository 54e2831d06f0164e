use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::numerics::{mean_std, Matrix, NumericsError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnScale {
    pub name: String,
    pub mean: f64,
    pub std: f64,
}

/// Per-column z-scoring `(x − mean) / std` with sample standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub columns: Vec<ColumnScale>,
}

impl Standardizer {
    /// Fits means and sample standard deviations of every column of `data`.
    pub fn fit<S: AsRef<str>>(data: &Matrix, names: &[S]) -> Result<Self, DatasetError> {
        if names.len() != data.cols() {
            return Err(NumericsError::DimensionMismatch {
                expected: data.cols(),
                found: names.len(),
            }
            .into());
        }
        let mut columns = Vec::with_capacity(names.len());
        for (j, name) in names.iter().enumerate() {
            let name = name.as_ref();
            let (mean, std) = mean_std(&data.column(j)).map_err(|e| match e {
                NumericsError::TooFewValues { found, needed } => {
                    DatasetError::TooFewRows { needed, found }
                }
                other => other.into(),
            })?;
            if !(std > 0.0) {
                return Err(DatasetError::ConstantColumn(name.to_string()));
            }
            columns.push(ColumnScale {
                name: name.to_string(),
                mean,
                std,
            });
        }
        Ok(Self { columns })
    }

    /// Identity scaling (mean 0, std 1) for the named columns.
    pub fn identity<S: AsRef<str>>(names: &[S]) -> Self {
        Self {
            columns: names
                .iter()
                .map(|n| ColumnScale {
                    name: n.as_ref().to_string(),
                    mean: 0.0,
                    std: 1.0,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    fn check_len(&self, n: usize) -> Result<(), NumericsError> {
        if n != self.columns.len() {
            return Err(NumericsError::DimensionMismatch {
                expected: self.columns.len(),
                found: n,
            });
        }
        Ok(())
    }

    pub fn transform_row(&self, row: &[f64]) -> Result<Vec<f64>, NumericsError> {
        self.check_len(row.len())?;
        Ok(row
            .iter()
            .zip(&self.columns)
            .map(|(x, c)| (x - c.mean) / c.std)
            .collect())
    }

    pub fn inverse_row(&self, row: &[f64]) -> Result<Vec<f64>, NumericsError> {
        self.check_len(row.len())?;
        Ok(row
            .iter()
            .zip(&self.columns)
            .map(|(z, c)| z * c.std + c.mean)
            .collect())
    }

    pub fn transform(&self, data: &Matrix) -> Result<Matrix, NumericsError> {
        self.check_len(data.cols())?;
        let mut out = data.clone();
        for i in 0..data.rows() {
            for (j, c) in self.columns.iter().enumerate() {
                out[(i, j)] = (data[(i, j)] - c.mean) / c.std;
            }
        }
        Ok(out)
    }

    pub fn inverse(&self, data: &Matrix) -> Result<Matrix, NumericsError> {
        self.check_len(data.cols())?;
        let mut out = data.clone();
        for i in 0..data.rows() {
            for (j, c) in self.columns.iter().enumerate() {
                out[(i, j)] = data[(i, j)] * c.std + c.mean;
            }
        }
        Ok(out)
    }
}

/// Z-scores every column of `data` and returns the fitted [`Standardizer`].
pub fn standardize<S: AsRef<str>>(
    data: &Matrix,
    names: &[S],
) -> Result<(Matrix, Standardizer), DatasetError> {
    let s = Standardizer::fit(data, names)?;
    let z = s.transform(data)?;
    Ok((z, s))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_column() {
        let m = Matrix::from_columns(&[vec![1.0, 3.0]]).unwrap();
        let (z, s) = standardize(&m, &["a"]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((z[(0, 0)] + h).abs() < 1e-15 && (z[(1, 0)] - h).abs() < 1e-15);
        assert_eq!(s.columns[0].mean, 2.0);
        assert!((s.columns[0].std - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn already_standardized_is_fixed_point() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let m = Matrix::from_columns(&[vec![-h, h]]).unwrap();
        let (z, s) = standardize(&m, &["a"]).unwrap();
        assert!(s.columns[0].mean.abs() < 1e-12);
        assert!((s.columns[0].std - 1.0).abs() < 1e-12);
        assert!((z[(0, 0)] + h).abs() < 1e-12);
    }

    #[test]
    fn constant_column_rejected() {
        let m = Matrix::from_columns(&[vec![1.0, 2.0, 3.0], vec![5.0, 5.0, 5.0]]).unwrap();
        let err = standardize(&m, &["ok", "flat"]).unwrap_err();
        assert!(matches!(err, DatasetError::ConstantColumn(c) if c == "flat"));
    }

    #[test]
    fn output_moments() {
        let m = Matrix::from_columns(&[vec![3.0, 9.0, -1.0, 4.5, 7.25]]).unwrap();
        let (z, _) = standardize(&m, &["a"]).unwrap();
        let (mu, sd) = mean_std(&z.column(0)).unwrap();
        assert!(mu.abs() < 1e-12 && (sd - 1.0).abs() < 1e-12);
    }
}
