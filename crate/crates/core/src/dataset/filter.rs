use std::fmt;
use std::str::FromStr;

use super::{resolve_column, DatasetError, ExperimentRecord, ExperimentTable, Layout, Soil};

#[derive(Debug, Clone, PartialEq)]
enum Condition {
    Layout(Layout),
    Soil(Soil),
    Numeric { column: &'static str, value: f64 },
}

/// Conjunction of `column=value` equality conditions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RecordFilter {
    conditions: Vec<Condition>,
    text: Vec<String>,
}

impl RecordFilter {
    pub fn all() -> Self {
        Self::default()
    }

    pub fn parse_many<S: AsRef<str>>(specs: &[S]) -> Result<Self, DatasetError> {
        let mut f = Self::all();
        for s in specs {
            f.push(s.as_ref())?;
        }
        Ok(f)
    }

    /// Adds one `column=value` condition.
    pub fn push(&mut self, spec: &str) -> Result<(), DatasetError> {
        let (column, value) = spec
            .split_once('=')
            .ok_or_else(|| DatasetError::BadFilter(spec.to_string()))?;
        let (column, value) = (column.trim(), value.trim());
        let bad = || DatasetError::BadFilter(spec.to_string());
        let cond = match column.to_ascii_lowercase().as_str() {
            "layout" => Condition::Layout(value.parse().map_err(|_| bad())?),
            "soil" => Condition::Soil(value.parse().map_err(|_| bad())?),
            _ => Condition::Numeric {
                column: resolve_column(column)?,
                value: value.parse().map_err(|_| bad())?,
            },
        };
        let text = match &cond {
            Condition::Layout(l) => format!("layout={l}"),
            Condition::Soil(s) => format!("soil={s}"),
            Condition::Numeric { column, .. } => format!("{column}={value}"),
        };
        self.conditions.push(cond);
        self.text.push(text);
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.conditions.is_empty()
    }

    pub fn matches(&self, record: &ExperimentRecord) -> bool {
        self.conditions.iter().all(|c| match c {
            Condition::Layout(l) => record.layout == *l,
            Condition::Soil(s) => record.soil == *s,
            Condition::Numeric { column, value } => record
                .value(column)
                .ok()
                .flatten()
                .is_some_and(|v| (v - value).abs() <= 1e-9 * value.abs().max(1.0)),
        })
    }

    pub fn apply(&self, table: &ExperimentTable) -> ExperimentTable {
        table.filtered(|r| self.matches(r))
    }
}

impl fmt::Display for RecordFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.text.is_empty() {
            f.write_str("all")
        } else {
            f.write_str(&self.text.join(";"))
        }
    }
}

impl FromStr for RecordFilter {
    type Err = DatasetError;

    /// Parses `;`-separated conditions, e.g. `soil=fine;slope=20`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(';').filter(|p| !p.trim().is_empty()).collect();
        Self::parse_many(&parts)
    }
}
