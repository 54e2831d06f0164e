use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::DatasetError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// Hydrophobic layer on the surface.
    HTop,
    /// Hydrophobic layer buried under a hydrophilic cover.
    HSub,
}

impl Layout {
    pub fn as_str(self) -> &'static str {
        match self {
            Layout::HTop => "h_top",
            Layout::HSub => "h_sub",
        }
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Layout {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "h_top" | "htop" => Ok(Layout::HTop),
            "h_sub" | "hsub" => Ok(Layout::HSub),
            other => Err(format!("unknown layout '{other}' (expected h_top or h_sub)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Soil {
    Fine,
    Medium,
    Coarse,
}

impl Soil {
    pub const ALL: [Soil; 3] = [Soil::Fine, Soil::Medium, Soil::Coarse];

    pub fn as_str(self) -> &'static str {
        match self {
            Soil::Fine => "fine",
            Soil::Medium => "medium",
            Soil::Coarse => "coarse",
        }
    }
}

impl fmt::Display for Soil {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Soil {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fine" => Ok(Soil::Fine),
            "medium" => Ok(Soil::Medium),
            "coarse" => Ok(Soil::Coarse),
            other => Err(format!("unknown soil '{other}' (expected fine, medium or coarse)")),
        }
    }
}

pub const INTERVALS: usize = 6;

/// One flume test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRecord {
    pub layout: Layout,
    pub soil: Soil,
    /// Median grain size, mm.
    pub d50: f64,
    /// Effective grain size, mm.
    pub d10: f64,
    pub cc: f64,
    pub cu: f64,
    /// Degrees.
    pub contact_angle: f64,
    /// Degrees.
    pub friction_angle: f64,
    /// Water entry value, kPa.
    pub wev: f64,
    /// Slope gradient, degrees.
    pub slope: f64,
    /// Rain intensity, mm/hr.
    pub rain_intensity: f64,
    /// Total discharge, L/m².
    pub td: Option<f64>,
    /// Total erosion, g/m².
    pub te: Option<f64>,
    /// Erosion rate per 10-minute interval, g/(m²·min).
    pub erosion_intervals: Option<[f64; INTERVALS]>,
    /// Discharge rate per 10-minute interval, L/(m²·min).
    pub discharge_intervals: Option<[f64; INTERVALS]>,
    /// 1 = infinite failure, 0 = no failure.
    pub failure: Option<u8>,
}

impl ExperimentRecord {
    /// Checks physical ranges and the outputs each layout must carry.
    /// Returns the offending column name on failure.
    pub fn validate(&self) -> Result<(), (&'static str, String)> {
        let finite = [
            ("d50_mm", self.d50),
            ("d10_mm", self.d10),
            ("cc", self.cc),
            ("cu", self.cu),
            ("contact_angle_deg", self.contact_angle),
            ("friction_angle_deg", self.friction_angle),
            ("wev_kpa", self.wev),
            ("slope_deg", self.slope),
            ("rain_mm_hr", self.rain_intensity),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err((name, "not a finite number".into()));
            }
        }
        if self.d50 <= 0.0 {
            return Err(("d50_mm", "must be > 0".into()));
        }
        if self.rain_intensity < 0.0 {
            return Err(("rain_mm_hr", "must be >= 0".into()));
        }
        if !(self.slope > 0.0 && self.slope < 90.0) {
            return Err(("slope_deg", "must lie in (0, 90)".into()));
        }
        if self.wev < 0.0 {
            return Err(("wev_kpa", "must be >= 0".into()));
        }
        for (name, v) in [("td_l_m2", self.td), ("te_g_m2", self.te)] {
            if v.is_some_and(|v| !v.is_finite()) {
                return Err((name, "not a finite number".into()));
            }
        }
        if let Some(f) = self.failure {
            if f > 1 {
                return Err(("failure", "must be 0 or 1".into()));
            }
        }
        match self.layout {
            Layout::HTop => {
                let required = [
                    ("td_l_m2", self.td.is_some()),
                    ("te_g_m2", self.te.is_some()),
                    ("e1", self.erosion_intervals.is_some()),
                    ("d1", self.discharge_intervals.is_some()),
                ];
                if let Some((name, _)) = required.iter().find(|(_, present)| !present) {
                    return Err((name, "required for h_top records".into()));
                }
            }
            Layout::HSub => {
                if self.failure.is_none() {
                    return Err(("failure", "required for h_sub records".into()));
                }
            }
        }
        Ok(())
    }

    /// Value of a numeric column by canonical name (see [`resolve_column`]).
    /// `None` means the optional value is absent.
    pub fn value(&self, column: &str) -> Result<Option<f64>, DatasetError> {
        let canonical = resolve_column(column)?;
        let interval = |series: &Option<[f64; INTERVALS]>, idx: usize| series.map(|s| s[idx]);
        let features = engineer_features(self);
        Ok(match canonical {
            "d50_mm" => Some(self.d50),
            "d10_mm" => Some(self.d10),
            "cc" => Some(self.cc),
            "cu" => Some(self.cu),
            "contact_angle_deg" => Some(self.contact_angle),
            "friction_angle_deg" => Some(self.friction_angle),
            "wev_kpa" => Some(self.wev),
            "slope_deg" => Some(self.slope),
            "rain_mm_hr" => Some(self.rain_intensity),
            "td_l_m2" => self.td,
            "te_g_m2" => self.te,
            "failure" => self.failure.map(f64::from),
            "x1" => Some(features.x1),
            "x2" => Some(features.x2),
            "x3" => Some(features.x3),
            other => {
                let (series, idx) = match other.as_bytes() {
                    [b'e', d] => (&self.erosion_intervals, d - b'1'),
                    [b'd', d] => (&self.discharge_intervals, d - b'1'),
                    _ => unreachable!("resolve_column returned {other}"),
                };
                interval(series, idx as usize)
            }
        })
    }
}

/// Numeric columns addressable by name, in CSV order, followed by the
/// engineered products.
pub const NUMERIC_COLUMNS: [&str; 27] = [
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
    "failure",
    "x1",
    "x2",
    "x3",
];

/// Maps a column name or a common symbol (`D50`, `WEV`, `delta`, `RI`, `TD`,
/// `TE`, ...) to its canonical name. Matching is case-insensitive.
pub fn resolve_column(name: &str) -> Result<&'static str, DatasetError> {
    let lower = name.trim().to_ascii_lowercase();
    let alias = match lower.as_str() {
        "d50" => "d50_mm",
        "d10" => "d10_mm",
        "theta" | "contact_angle" => "contact_angle_deg",
        "phi" | "friction_angle" => "friction_angle_deg",
        "wev" | "psi_wev" | "ψwev" => "wev_kpa",
        "slope" | "delta" | "δ" => "slope_deg",
        "ri" | "rain" | "rain_intensity" => "rain_mm_hr",
        "td" => "td_l_m2",
        "te" => "te_g_m2",
        "d50_ri" => "x1",
        "wev_ri" => "x2",
        "slope_ri" => "x3",
        other => other,
    };
    NUMERIC_COLUMNS
        .iter()
        .copied()
        .find(|c| *c == alias)
        .ok_or_else(|| DatasetError::UnknownColumn(name.to_string()))
}

/// Names of the engineered products, in model coefficient order.
pub const ENGINEERED_FEATURE_NAMES: [&str; 3] = ["x1", "x2", "x3"];

/// Rain-gated products: every feature vanishes when rain intensity is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EngineeredFeatures {
    /// D50·RI, mm·mm/hr.
    pub x1: f64,
    /// Ψwev·RI, kPa·mm/hr.
    pub x2: f64,
    /// δ·RI, deg·mm/hr.
    pub x3: f64,
}

impl EngineeredFeatures {
    pub fn from_raw(d50: f64, wev: f64, slope: f64, rain_intensity: f64) -> Self {
        Self {
            x1: d50 * rain_intensity,
            x2: wev * rain_intensity,
            x3: slope * rain_intensity,
        }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x1, self.x2, self.x3]
    }
}

pub fn engineer_features(record: &ExperimentRecord) -> EngineeredFeatures {
    EngineeredFeatures::from_raw(record.d50, record.wev, record.slope, record.rain_intensity)
}

#[cfg(test)]
pub(crate) fn sample_record() -> ExperimentRecord {
    ExperimentRecord {
        layout: Layout::HTop,
        soil: Soil::Fine,
        d50: 0.2,
        d10: 0.15,
        cc: 1.1,
        cu: 1.6,
        contact_angle: 120.0,
        friction_angle: 30.0,
        wev: 2.0,
        slope: 20.0,
        rain_intensity: 18.0,
        td: Some(20.0),
        te: Some(500.0),
        erosion_intervals: Some([1.0, 2.0, 3.0, 4.0, 5.0, 6.0]),
        discharge_intervals: Some([0.1, 0.2, 0.3, 0.4, 0.5, 0.6]),
        failure: None,
    }
}
