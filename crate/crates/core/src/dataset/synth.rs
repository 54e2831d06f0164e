//! Synthetic stand-in for the flume experiments.
//!
//! The design matrix is the factorial of soils × rain intensities × slopes ×
//! layouts. Responses come from fixed planted rules on the rain-gated products
//! `(x1, x2, x3) = (D50·RI, Ψwev·RI, δ·RI)`:
//!
//! * total discharge `TD = max(0, 11.3 − 0.46·x1 + 0.025·x2 + 0.025·x3 + ε)`
//! * total erosion `TE = max(0, −15.2 − 90.7·x1 − 5.2·x2 + 2.9·x3 + ε)`
//! * interval rates: the total split by fixed weights over six 10-minute
//!   intervals, divided by 10 minutes
//! * failure (h_sub only): `1` iff `−2.38 − 2.39·z1 + 0.53·z2 + 4.13·z3 + ε ≥ 0`,
//!   where `z` are the products z-scored over the h_sub design cells
//!
//! Each `ε` is Gaussian with standard deviation `noise_scale` times the
//! population standard deviation of that rule's noise-free linear part over
//! the design, so `noise_scale` is a noise-to-signal ratio.
//!
//! Water entry values are not derived from anything: they are explicit inputs
//! and the defaults are placeholders.

use super::record::INTERVALS;
use super::{
    engineer_features, DatasetError, ExperimentRecord, ExperimentTable, Layout, Soil,
    Standardizer,
};
use crate::numerics::{Matrix, SplitMix64};

#[derive(Debug, Clone, PartialEq)]
pub struct SoilSpec {
    pub soil: Soil,
    pub d50: f64,
    pub d10: f64,
    pub cc: f64,
    pub cu: f64,
    pub contact_angle: f64,
    pub friction_angle: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthDesign {
    pub soils: Vec<SoilSpec>,
    pub rain_intensities: Vec<f64>,
    pub slopes: Vec<f64>,
    pub layouts: Vec<Layout>,
}

impl Default for SynthDesign {
    /// Three sands (D50 0.2/0.4/0.65 mm, friction 30/32/34°), rain 18/70/120
    /// mm/hr, slopes 20/30°, both layouts: 36 cells. D10, Cc, Cu and contact
    /// angle are placeholder descriptors.
    fn default() -> Self {
        let soil = |soil, d50: f64, cc, cu, contact_angle, friction_angle| SoilSpec {
            soil,
            d50,
            d10: d50 / 1.35,
            cc,
            cu,
            contact_angle,
            friction_angle,
        };
        Self {
            soils: vec![
                soil(Soil::Fine, 0.2, 1.10, 1.60, 120.0, 30.0),
                soil(Soil::Medium, 0.4, 1.00, 1.50, 110.0, 32.0),
                soil(Soil::Coarse, 0.65, 0.90, 1.40, 100.0, 34.0),
            ],
            rain_intensities: vec![18.0, 70.0, 120.0],
            slopes: vec![20.0, 30.0],
            layouts: vec![Layout::HTop, Layout::HSub],
        }
    }
}

/// Water entry value (kPa) per soil.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WevBySoil {
    pub fine: f64,
    pub medium: f64,
    pub coarse: f64,
}

impl Default for WevBySoil {
    /// Placeholder values, not measurements.
    fn default() -> Self {
        Self {
            fine: 2.0,
            medium: 1.0,
            coarse: 0.5,
        }
    }
}

impl WevBySoil {
    pub fn get(&self, soil: Soil) -> f64 {
        match soil {
            Soil::Fine => self.fine,
            Soil::Medium => self.medium,
            Soil::Coarse => self.coarse,
        }
    }
}

/// Coefficients `[intercept, x1, x2, x3]` of the planted response rules.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantedRules {
    pub td: [f64; 4],
    pub te: [f64; 4],
    pub failure_logit: [f64; 4],
    pub interval_weights: [f64; INTERVALS],
}

impl Default for PlantedRules {
    fn default() -> Self {
        Self {
            td: [11.3, -0.46, 0.025, 0.025],
            te: [-15.2, -90.7, -5.2, 2.9],
            failure_logit: [-2.38, -2.39, 0.53, 4.13],
            interval_weights: [0.30, 0.20, 0.15, 0.12, 0.12, 0.11],
        }
    }
}

impl PlantedRules {
    fn describe(&self) -> String {
        format!(
            "td={:?}; te={:?}; failure_logit={:?} on h_sub-standardized products; interval_weights={:?}",
            self.td, self.te, self.failure_logit, self.interval_weights
        )
    }
}

fn linear(coef: &[f64; 4], x: [f64; 3]) -> f64 {
    coef[0] + coef[1] * x[0] + coef[2] * x[1] + coef[3] * x[2]
}

fn population_std(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / n).sqrt()
}

/// Generates one record per design cell with the default [`PlantedRules`].
pub fn synth_generate(
    design: &SynthDesign,
    wev_by_soil: &WevBySoil,
    noise_scale: f64,
    seed: u64,
) -> Result<ExperimentTable, DatasetError> {
    synth_generate_with(design, wev_by_soil, &PlantedRules::default(), noise_scale, seed)
}

pub fn synth_generate_with(
    design: &SynthDesign,
    wev_by_soil: &WevBySoil,
    rules: &PlantedRules,
    noise_scale: f64,
    seed: u64,
) -> Result<ExperimentTable, DatasetError> {
    validate(design, wev_by_soil, noise_scale)?;

    let mut records = Vec::new();
    for &layout in &design.layouts {
        for spec in &design.soils {
            for &ri in &design.rain_intensities {
                for &slope in &design.slopes {
                    records.push(ExperimentRecord {
                        layout,
                        soil: spec.soil,
                        d50: spec.d50,
                        d10: spec.d10,
                        cc: spec.cc,
                        cu: spec.cu,
                        contact_angle: spec.contact_angle,
                        friction_angle: spec.friction_angle,
                        wev: wev_by_soil.get(spec.soil),
                        slope,
                        rain_intensity: ri,
                        td: None,
                        te: None,
                        erosion_intervals: None,
                        discharge_intervals: None,
                        failure: None,
                    });
                }
            }
        }
    }

    let features: Vec<[f64; 3]> = records
        .iter()
        .map(|r| engineer_features(r).to_array())
        .collect();
    let td_rule: Vec<f64> = features.iter().map(|x| linear(&rules.td, *x)).collect();
    let te_rule: Vec<f64> = features.iter().map(|x| linear(&rules.te, *x)).collect();

    let sub_idx: Vec<usize> = (0..records.len())
        .filter(|&i| records[i].layout == Layout::HSub)
        .collect();
    let logit_rule: Vec<f64> = if sub_idx.is_empty() {
        vec![0.0; records.len()]
    } else {
        let sub = Matrix::from_rows(&sub_idx.iter().map(|&i| features[i]).collect::<Vec<_>>())?;
        let scaler = Standardizer::fit(&sub, &["x1", "x2", "x3"]).map_err(|e| {
            DatasetError::BadDesign(format!(
                "h_sub cells need varying engineered products to plant failures: {e}"
            ))
        })?;
        features
            .iter()
            .map(|x| {
                let z = scaler.transform_row(x).expect("three features");
                linear(&rules.failure_logit, [z[0], z[1], z[2]])
            })
            .collect()
    };

    let sd_td = noise_scale * population_std(&td_rule);
    let sd_te = noise_scale * population_std(&te_rule);
    let sub_logits: Vec<f64> = sub_idx.iter().map(|&i| logit_rule[i]).collect();
    let sd_logit = noise_scale * population_std(&sub_logits);

    let mut rng = SplitMix64::new(seed);
    for (i, r) in records.iter_mut().enumerate() {
        // three draws per cell regardless of layout keeps streams aligned
        let (z_td, z_te, z_fail) = (rng.normal(), rng.normal(), rng.normal());
        let td = (td_rule[i] + sd_td * z_td).max(0.0);
        let te = (te_rule[i] + sd_te * z_te).max(0.0);
        r.td = Some(td);
        r.te = Some(te);
        r.discharge_intervals = Some(rules.interval_weights.map(|w| td * w / 10.0));
        r.erosion_intervals = Some(rules.interval_weights.map(|w| te * w / 10.0));
        if r.layout == Layout::HSub {
            r.failure = Some(u8::from(logit_rule[i] + sd_logit * z_fail >= 0.0));
        }
    }

    let provenance = format!(
        "synthetic: seed={seed}; noise_scale={noise_scale}; wev_kpa(fine/medium/coarse)={}/{}/{}; {}",
        wev_by_soil.fine,
        wev_by_soil.medium,
        wev_by_soil.coarse,
        rules.describe()
    );
    Ok(ExperimentTable::new(records, provenance))
}

fn validate(design: &SynthDesign, wev: &WevBySoil, noise_scale: f64) -> Result<(), DatasetError> {
    let bad = |m: String| Err(DatasetError::BadDesign(m));
    if !(noise_scale >= 0.0 && noise_scale.is_finite()) {
        return bad(format!("noise_scale must be finite and >= 0, got {noise_scale}"));
    }
    if design.soils.is_empty()
        || design.rain_intensities.is_empty()
        || design.slopes.is_empty()
        || design.layouts.is_empty()
    {
        return bad("every design factor needs at least one level".into());
    }
    for s in &design.soils {
        let w = wev.get(s.soil);
        if !(w > 0.0 && w.is_finite()) {
            return bad(format!("water entry value for {} must be > 0, got {w}", s.soil));
        }
        if !(s.d50 > 0.0) {
            return bad(format!("d50 for {} must be > 0", s.soil));
        }
    }
    if design.rain_intensities.iter().any(|r| !(*r >= 0.0 && r.is_finite())) {
        return bad("rain intensities must be finite and >= 0".into());
    }
    if design.slopes.iter().any(|s| !(*s > 0.0 && *s < 90.0)) {
        return bad("slopes must lie in (0, 90)".into());
    }
    Ok(())
}
