//! One-at-a-time standard-deviation sweeps of a logistic failure model.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::classify::{ClassifyError, LogisticModel};
use crate::dataset::{DatasetError, EngineeredFeatures, ExperimentTable, RecordFilter};
use crate::numerics::{mean_std, NumericsError};

pub const DEFAULT_RANGE_SD: f64 = 2.0;
pub const DEFAULT_STEP_SD: f64 = 0.05;

#[derive(Debug, Error)]
pub enum SensitivityError {
    #[error("filter '{0}' matches no rows")]
    EmptyFilter(String),
    #[error("filter '{filter}' leaves {found} row(s); at least 2 are needed")]
    TooFewRows { filter: String, found: usize },
    #[error("unknown sweep variable '{0}' (expected d50, wev, slope or ri)")]
    UnknownVariable(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// The four raw inputs of the rain-gated products.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Variable {
    D50,
    Wev,
    Slope,
    Ri,
}

impl Variable {
    pub const ALL: [Variable; 4] = [Variable::D50, Variable::Wev, Variable::Slope, Variable::Ri];

    pub fn as_str(self) -> &'static str {
        match self {
            Variable::D50 => "d50",
            Variable::Wev => "wev",
            Variable::Slope => "slope",
            Variable::Ri => "ri",
        }
    }

    fn column(self) -> &'static str {
        match self {
            Variable::D50 => "d50_mm",
            Variable::Wev => "wev_kpa",
            Variable::Slope => "slope_deg",
            Variable::Ri => "rain_mm_hr",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variable {
    type Err = SensitivityError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "d50" | "d50_mm" => Ok(Variable::D50),
            "wev" | "psi_wev" | "wev_kpa" => Ok(Variable::Wev),
            "slope" | "delta" | "slope_deg" => Ok(Variable::Slope),
            "ri" | "rain" | "rain_mm_hr" => Ok(Variable::Ri),
            _ => Err(SensitivityError::UnknownVariable(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepGrid {
    pub range_sd: f64,
    pub step: f64,
}

impl Default for SweepGrid {
    fn default() -> Self {
        Self {
            range_sd: DEFAULT_RANGE_SD,
            step: DEFAULT_STEP_SD,
        }
    }
}

impl SweepGrid {
    /// Positions `j·step` for `j = −m..=m`, where `m = range_sd / step` must
    /// be a whole number.
    pub fn positions(&self) -> Result<Vec<f64>, SensitivityError> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(SensitivityError::InvalidGrid(format!("step must be positive, got {}", self.step)));
        }
        if !(self.range_sd > 0.0 && self.range_sd.is_finite()) {
            return Err(SensitivityError::InvalidGrid(format!(
                "range must be positive, got {}",
                self.range_sd
            )));
        }
        let ratio = self.range_sd / self.step;
        let m = ratio.round();
        if (ratio - m).abs() > 1e-9 * ratio.max(1.0) || m > 1e6 {
            return Err(SensitivityError::InvalidGrid(format!(
                "range {} is not a whole number of {}-SD steps",
                self.range_sd, self.step
            )));
        }
        let m = m as i64;
        Ok((-m..=m).map(|j| j as f64 * self.step).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepSample {
    pub position_sd: f64,
    pub raw_value: f64,
    pub probability: f64,
    /// The raw value fell below zero and was clamped to 0.
    pub clamped: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityCurve {
    pub variable: Variable,
    /// Description of the row filter the statistics came from.
    pub context: String,
    pub samples: Vec<SweepSample>,
    pub held_at_mean: Vec<Variable>,
    /// Mean and sample std of each raw variable over the filtered rows, in
    /// `d50, wev, slope, ri` order.
    pub means: [f64; 4],
    pub stds: [f64; 4],
}

impl SensitivityCurve {
    /// `P(+max) − P(−max)`.
    pub fn rise(&self) -> f64 {
        match (self.samples.first(), self.samples.last()) {
            (Some(a), Some(b)) => b.probability - a.probability,
            _ => 0.0,
        }
    }
}

fn raw_stats(table: &ExperimentTable, filter: &RecordFilter) -> Result<([f64; 4], [f64; 4]), SensitivityError> {
    let rows = filter.apply(table);
    match rows.len() {
        0 => return Err(SensitivityError::EmptyFilter(filter.to_string())),
        1 => {
            return Err(SensitivityError::TooFewRows {
                filter: filter.to_string(),
                found: 1,
            })
        }
        _ => {}
    }
    let mut means = [0.0; 4];
    let mut stds = [0.0; 4];
    for v in Variable::ALL {
        let (m, s) = mean_std(&rows.column(v.column())?)?;
        means[v.index()] = m;
        stds[v.index()] = s;
    }
    Ok((means, stds))
}

fn curve(
    model: &LogisticModel,
    variable: Variable,
    positions: &[f64],
    means: [f64; 4],
    stds: [f64; 4],
    context: String,
) -> Result<SensitivityCurve, SensitivityError> {
    let i = variable.index();
    let mut samples = Vec::with_capacity(positions.len());
    for &s in positions {
        let mut raw = means;
        let value = means[i] + s * stds[i];
        let clamped = value < 0.0;
        raw[i] = if clamped { 0.0 } else { value };
        let x = EngineeredFeatures::from_raw(raw[0], raw[1], raw[2], raw[3]);
        samples.push(SweepSample {
            position_sd: s,
            raw_value: raw[i],
            probability: model.probability_raw(&x.to_array())?,
            clamped,
        });
    }
    Ok(SensitivityCurve {
        variable,
        context,
        samples,
        held_at_mean: Variable::ALL.into_iter().filter(|v| *v != variable).collect(),
        means,
        stds,
    })
}

/// Sweeps one variable from `−range_sd` to `+range_sd` standard deviations
/// about its mean over the filtered rows, holding the other three at their
/// means and recomputing every product at each position.
pub fn sweep(
    model: &LogisticModel,
    table: &ExperimentTable,
    variable: Variable,
    grid: SweepGrid,
    filter: &RecordFilter,
) -> Result<SensitivityCurve, SensitivityError> {
    let positions = grid.positions()?;
    let (means, stds) = raw_stats(table, filter)?;
    curve(model, variable, &positions, means, stds, filter.to_string())
}

/// One curve per variable on a shared grid and filter.
pub fn sweep_all(
    model: &LogisticModel,
    table: &ExperimentTable,
    grid: SweepGrid,
    filter: &RecordFilter,
) -> Result<Vec<SensitivityCurve>, SensitivityError> {
    let positions = grid.positions()?;
    let (means, stds) = raw_stats(table, filter)?;
    Variable::ALL
        .into_iter()
        .map(|v| curve(model, v, &positions, means, stds, filter.to_string()))
        .collect()
}

/// `variable,context,position_sd,raw_value,probability,clamped`.
pub fn write_curves_csv<W: Write>(writer: W, curves: &[SensitivityCurve]) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["variable", "context", "position_sd", "raw_value", "probability", "clamped"])?;
    for c in curves {
        for s in &c.samples {
            w.write_record([
                c.variable.as_str(),
                &c.context,
                &s.position_sd.to_string(),
                &s.raw_value.to_string(),
                &s.probability.to_string(),
                if s.clamped { "true" } else { "false" },
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
