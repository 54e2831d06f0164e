use std::io::Write;

use serde::{Deserialize, Serialize};

use super::UnsupervisedError;
use crate::dataset::{ExperimentRecord, ExperimentTable, Standardizer};
use crate::numerics::{dot, eigh_sym, Matrix};

/// Default PCA inputs: grain size, water entry value, slope, rain intensity,
/// total discharge and total erosion.
pub const PCA_COLUMNS: [&str; 6] = ["d50_mm", "wev_kpa", "slope_deg", "rain_mm_hr", "td_l_m2", "te_g_m2"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub columns: Vec<String>,
    pub standardizer: Standardizer,
    /// Unit component vectors, largest eigenvalue first.
    pub loadings: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub ratios: Vec<f64>,
    pub cumulative: Vec<f64>,
}

/// Norms and pairwise dot products of a set of loading vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadingCheck {
    pub norms: Vec<f64>,
    /// `(i, j, vᵢ·vⱼ)` for every `i < j`.
    pub dots: Vec<(usize, usize, f64)>,
}

impl LoadingCheck {
    pub fn max_norm_error(&self) -> f64 {
        self.norms.iter().fold(0.0, |m, n| m.max((n - 1.0).abs()))
    }

    pub fn max_abs_dot(&self) -> f64 {
        self.dots.iter().fold(0.0, |m, d| m.max(d.2.abs()))
    }

    /// Unit norms and mutual orthogonality, each within `tol`.
    pub fn passes(&self, tol: f64) -> bool {
        self.max_norm_error() <= tol && self.max_abs_dot() <= tol
    }
}

pub fn check_loadings<V: AsRef<[f64]>>(loadings: &[V]) -> LoadingCheck {
    let norms = loadings.iter().map(|v| dot(v.as_ref(), v.as_ref()).sqrt()).collect();
    let mut dots = Vec::new();
    for i in 0..loadings.len() {
        for j in i + 1..loadings.len() {
            dots.push((i, j, dot(loadings[i].as_ref(), loadings[j].as_ref())));
        }
    }
    LoadingCheck { norms, dots }
}

/// Running sums of the ratios.
pub fn cumulative_ratios(ratios: &[f64]) -> Vec<f64> {
    ratios
        .iter()
        .scan(0.0, |acc, r| {
            *acc += r;
            Some(*acc)
        })
        .collect()
}

/// PCA of `columns` of `table`.
pub fn fit_pca<S: AsRef<str>>(table: &ExperimentTable, columns: &[S]) -> Result<PcaModel, UnsupervisedError> {
    let data = table.matrix(columns)?;
    fit_pca_matrix(&data, columns)
}

/// Standardizes each column, then eigendecomposes the correlation matrix.
/// Tiny negative eigenvalues from rounding count as zero in the ratios.
pub fn fit_pca_matrix<S: AsRef<str>>(data: &Matrix, names: &[S]) -> Result<PcaModel, UnsupervisedError> {
    if data.rows() < 2 {
        return Err(UnsupervisedError::TooFewRows {
            needed: 2,
            found: data.rows(),
        });
    }
    let standardizer = Standardizer::fit(data, names)?;
    let z = standardizer.transform(data)?;
    let d = z.cols();
    let scale = 1.0 / (z.rows() - 1) as f64;
    let mut corr = Matrix::zeros(d, d);
    for i in 0..d {
        for j in 0..=i {
            let v = z.row_iter().map(|r| r[i] * r[j]).sum::<f64>() * scale;
            corr[(i, j)] = v;
            corr[(j, i)] = v;
        }
    }
    let eig = eigh_sym(&corr)?;
    let total: f64 = eig.eigenvalues.iter().map(|l| l.max(0.0)).sum();
    let ratios: Vec<f64> = eig.eigenvalues.iter().map(|l| l.max(0.0) / total).collect();
    Ok(PcaModel {
        columns: names.iter().map(|s| s.as_ref().to_string()).collect(),
        standardizer,
        cumulative: cumulative_ratios(&ratios),
        loadings: eig.eigenvectors,
        eigenvalues: eig.eigenvalues,
        ratios,
    })
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.loadings.len()
    }

    pub fn check(&self) -> LoadingCheck {
        check_loadings(&self.loadings)
    }

    fn check_components(&self, n_components: usize) -> Result<(), UnsupervisedError> {
        if n_components > self.n_components() {
            return Err(UnsupervisedError::DimensionMismatch {
                expected: self.n_components(),
                found: n_components,
            });
        }
        Ok(())
    }

    /// Scores `Z1..Zn` of an already standardized row.
    pub fn project_standardized(&self, z: &[f64], n_components: usize) -> Result<Vec<f64>, UnsupervisedError> {
        self.check_components(n_components)?;
        if z.len() != self.columns.len() {
            return Err(UnsupervisedError::DimensionMismatch {
                expected: self.columns.len(),
                found: z.len(),
            });
        }
        Ok(self.loadings[..n_components].iter().map(|v| dot(v, z)).collect())
    }

    /// Scores of a raw row given in model column order.
    pub fn project(&self, row: &[f64], n_components: usize) -> Result<Vec<f64>, UnsupervisedError> {
        if row.len() != self.columns.len() {
            return Err(UnsupervisedError::DimensionMismatch {
                expected: self.columns.len(),
                found: row.len(),
            });
        }
        let z = self.standardizer.transform_row(row)?;
        self.project_standardized(&z, n_components)
    }

    pub fn project_record(&self, record: &ExperimentRecord, n_components: usize) -> Result<Vec<f64>, UnsupervisedError> {
        let table = ExperimentTable::new(vec![record.clone()], "");
        let row = table.matrix(&self.columns)?;
        self.project(row.row(0), n_components)
    }

    /// `n × n_components` score matrix of every row of `table`.
    pub fn project_table(&self, table: &ExperimentTable, n_components: usize) -> Result<Matrix, UnsupervisedError> {
        self.check_components(n_components)?;
        let data = table.matrix(&self.columns)?;
        let mut out = Matrix::zeros(data.rows(), n_components);
        for (i, row) in data.row_iter().enumerate() {
            for (j, s) in self.project(row, n_components)?.into_iter().enumerate() {
                out[(i, j)] = s;
            }
        }
        Ok(out)
    }

    /// Standardized row from scores on the leading components.
    pub fn reconstruct_standardized(&self, scores: &[f64]) -> Result<Vec<f64>, UnsupervisedError> {
        self.check_components(scores.len())?;
        let mut z = vec![0.0; self.columns.len()];
        for (s, v) in scores.iter().zip(&self.loadings) {
            z.iter_mut().zip(v).for_each(|(zi, vi)| *zi += s * vi);
        }
        Ok(z)
    }

    /// CSV with one row per component: eigenvalue, ratio, cumulative and
    /// the loading on every input column.
    pub fn write_report<W: Write>(&self, writer: W) -> Result<(), UnsupervisedError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["component".to_string(), "eigenvalue".into(), "ratio".into(), "cumulative".into()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        for row in explained_variance_report(self) {
            let mut rec = vec![
                format!("PC{}", row.component),
                row.eigenvalue.to_string(),
                row.ratio.to_string(),
                row.cumulative.to_string(),
            ];
            rec.extend(self.loadings[row.component - 1].iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceRow {
    /// 1-based component number.
    pub component: usize,
    pub eigenvalue: f64,
    pub ratio: f64,
    pub cumulative: f64,
}

pub fn explained_variance_report(pca: &PcaModel) -> Vec<VarianceRow> {
    (0..pca.n_components())
        .map(|i| VarianceRow {
            component: i + 1,
            eigenvalue: pca.eigenvalues[i],
            ratio: pca.ratios[i],
            cumulative: pca.cumulative[i],
        })
        .collect()
}
