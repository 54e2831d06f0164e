use std::path::Path;

use serde::Serialize;

use super::{read_model, read_table, write_json, ReportArgs};
use crate::classify::{ConfusionMatrix, LogisticDocument, Metrics};
use crate::dataset::{ExperimentTable, SplitSpec};
use crate::error::Error;
use crate::regression::{mse, r2, MlrDocument};
use crate::validation::{evaluate_holdout, Predictor, SvcDocument};

/// Train/test evaluation of saved models, laid out like the regression and
/// logistic summary tables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub data: String,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub mlr: Vec<MlrSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub logistic: Option<ClassifierSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svc: Option<ClassifierSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MlrSection {
    pub model: String,
    pub target: String,
    pub intercept: f64,
    pub coefficients: Vec<Term>,
    pub train: MlrSplitScores,
    pub test: MlrSplitScores,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Term {
    pub name: String,
    pub value: f64,
}

fn term(name: impl Into<String>, value: f64) -> Term {
    Term {
        name: name.into(),
        value,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MlrSplitScores {
    pub n: usize,
    /// `None` when the target is constant on this split.
    pub r2: Option<f64>,
    pub mse: f64,
    /// Predictions below zero for a non-negative physical quantity.
    pub negative_predictions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifierSection {
    pub model: String,
    /// Intercept first, then one entry per feature.
    pub coefficients: Vec<Term>,
    pub train: ClassifierSplitScores,
    pub test: ClassifierSplitScores,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassifierSplitScores {
    pub n: usize,
    pub confusion: ConfusionMatrix,
    #[serde(flatten)]
    pub metrics: Metrics,
}

fn require_split(path: &Path, split: &Option<SplitSpec>) -> Result<SplitSpec, Error> {
    split.clone().ok_or_else(|| Error::BadArtifact {
        path: path.to_path_buf(),
        message: "model has no split metadata; retrain it with this tool".into(),
    })
}

fn mlr_scores(doc: &MlrDocument, rows: &ExperimentTable) -> Result<MlrSplitScores, Error> {
    let model = doc.model();
    let y = rows.column(&doc.target)?;
    let p = model.predict_matrix(&rows.engineered_matrix())?;
    Ok(MlrSplitScores {
        n: rows.len(),
        r2: r2(&y, &p).ok(),
        mse: mse(&y, &p)?,
        negative_predictions: p.iter().filter(|v| **v < 0.0).count(),
    })
}

fn mlr_section(path: &Path, table: &ExperimentTable) -> Result<MlrSection, Error> {
    let doc: MlrDocument = read_model(path, MlrDocument::MODEL_TYPE)?;
    let (train, test) = require_split(path, &doc.split)?.apply(table)?;
    Ok(MlrSection {
        model: path.display().to_string(),
        target: doc.target.clone(),
        intercept: doc.intercept,
        coefficients: doc.features.iter().zip(&doc.coefficients).map(|(n, v)| term(n, *v)).collect(),
        train: mlr_scores(&doc, &train)?,
        test: mlr_scores(&doc, &test)?,
    })
}

fn classifier_scores<P: Predictor>(model: &P, rows: &ExperimentTable) -> Result<ClassifierSplitScores, Error> {
    let (confusion, metrics) = evaluate_holdout(model, rows)?;
    Ok(ClassifierSplitScores {
        n: rows.len(),
        confusion,
        metrics,
    })
}

fn logistic_section(path: &Path, table: &ExperimentTable) -> Result<ClassifierSection, Error> {
    let doc: LogisticDocument = read_model(path, LogisticDocument::MODEL_TYPE)?;
    let (train, test) = require_split(path, &doc.split)?.apply(table)?;
    let model = doc.model();
    let mut coefficients = vec![term("intercept", doc.intercept)];
    coefficients.extend(doc.features.iter().zip(&doc.coefficients).map(|(n, v)| term(n, *v)));
    Ok(ClassifierSection {
        model: path.display().to_string(),
        coefficients,
        train: classifier_scores(&model, &train)?,
        test: classifier_scores(&model, &test)?,
    })
}

fn svc_section(path: &Path, table: &ExperimentTable) -> Result<ClassifierSection, Error> {
    let doc: SvcDocument = read_model(path, SvcDocument::MODEL_TYPE)?;
    let (train, test) = require_split(path, &doc.split)?.apply(table)?;
    let pipeline = doc.pipeline();
    let mut coefficients = vec![term("b", doc.b)];
    coefficients.extend(doc.w.iter().enumerate().map(|(i, w)| term(format!("w_z{}", i + 1), *w)));
    Ok(ClassifierSection {
        model: path.display().to_string(),
        coefficients,
        train: classifier_scores(&pipeline, &train)?,
        test: classifier_scores(&pipeline, &test)?,
    })
}

pub(super) fn report(a: &ReportArgs) -> Result<String, Error> {
    if a.mlr.is_empty() && a.lr.is_none() && a.svc.is_none() {
        return Err(Error::Usage("report needs at least one of --mlr, --lr, --svc".into()));
    }
    let table = read_table(&a.input)?;
    let report = Report {
        data: a.input.display().to_string(),
        mlr: a.mlr.iter().map(|p| mlr_section(p, &table)).collect::<Result<_, _>>()?,
        logistic: a.lr.as_deref().map(|p| logistic_section(p, &table)).transpose()?,
        svc: a.svc.as_deref().map(|p| svc_section(p, &table)).transpose()?,
    };
    write_json(&a.out, &report)?;
    Ok(format!(
        "report: {} regression, {} logistic, {} svc section(s) -> {}",
        report.mlr.len(),
        usize::from(report.logistic.is_some()),
        usize::from(report.svc.is_some()),
        a.out.display()
    ))
}
