use std::io::Write;

use super::{resolve_column, DatasetError, ExperimentTable};
use crate::numerics::{pearson_corr, Matrix, NumericsError};

/// Soil descriptors, controls and measured outputs: the default correlation set.
pub const CORRELATION_COLUMNS: [&str; 23] = [
    "d50_mm",
    "d10_mm",
    "cc",
    "cu",
    "contact_angle_deg",
    "friction_angle_deg",
    "wev_kpa",
    "slope_deg",
    "rain_mm_hr",
    "td_l_m2",
    "te_g_m2",
    "e1",
    "e2",
    "e3",
    "e4",
    "e5",
    "e6",
    "d1",
    "d2",
    "d3",
    "d4",
    "d5",
    "d6",
];

/// Square matrix with one label per row/column.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMatrix {
    pub labels: Vec<String>,
    pub matrix: Matrix,
}

impl LabeledMatrix {
    pub fn get(&self, row: &str, col: &str) -> Option<f64> {
        let i = self.labels.iter().position(|l| l == row)?;
        let j = self.labels.iter().position(|l| l == col)?;
        Some(self.matrix[(i, j)])
    }

    /// Square CSV: a `variable` header cell, then one labeled row per variable.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DatasetError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["variable".to_string()];
        header.extend(self.labels.iter().cloned());
        w.write_record(&header)?;
        for (i, label) in self.labels.iter().enumerate() {
            let mut row = vec![label.clone()];
            row.extend(self.matrix.row(i).iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Pairwise Pearson correlations of the selected columns. Labels are the
/// canonical column names.
pub fn correlation_matrix<S: AsRef<str>>(
    table: &ExperimentTable,
    columns: &[S],
) -> Result<LabeledMatrix, DatasetError> {
    let labels = columns
        .iter()
        .map(|c| resolve_column(c.as_ref()).map(str::to_string))
        .collect::<Result<Vec<_>, _>>()?;
    let data = labels
        .iter()
        .map(|c| table.column(c))
        .collect::<Result<Vec<_>, _>>()?;
    let n = labels.len();
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let r = if i == j {
                // still validates the column
                pearson_corr(&data[i], &data[i]).map(|_| 1.0)
            } else {
                pearson_corr(&data[i], &data[j])
            };
            let r = r.map_err(|e| match e {
                NumericsError::ConstantColumn => {
                    let bad = if is_constant(&data[i]) { i } else { j };
                    DatasetError::ConstantColumn(labels[bad].clone())
                }
                NumericsError::TooFewValues { needed, found } => {
                    DatasetError::TooFewRows { needed, found }
                }
                other => other.into(),
            })?;
            m[(i, j)] = r;
            m[(j, i)] = r;
        }
    }
    Ok(LabeledMatrix { labels, matrix: m })
}

fn is_constant(x: &[f64]) -> bool {
    x.windows(2).all(|w| w[0] == w[1])
}
