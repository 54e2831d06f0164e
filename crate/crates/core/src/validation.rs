//! Hold-out evaluation and repeated K-fold cross-validation.

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::classify::{
    confusion, fit_logistic, fit_svc, logistic_predict, metrics, svc_predict, ClassifyError, ConfusionMatrix,
    LogisticModel, LogisticOptions, Metrics, Score, SvcModel,
};
use crate::dataset::{
    kfold_partition, DatasetError, ExperimentRecord, ExperimentTable, SplitSpec, Standardizer,
    ENGINEERED_FEATURE_NAMES,
};
use crate::numerics::{derive_seed, mean_std, NumericsError};
use crate::unsupervised::{fit_pca, PcaModel, UnsupervisedError, PCA_COLUMNS};

/// Text recorded in every report about how features were scaled.
pub const STANDARDIZATION_NOTE: &str = "features re-standardized per fold from training rows only";

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("evaluation table is empty")]
    EmptyTable,
    #[error("runs must be at least 1")]
    BadRuns,
    #[error("run {run}, fold {fold}: {source}")]
    Fold {
        run: usize,
        fold: usize,
        #[source]
        source: Box<ValidationError>,
    },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error(transparent)]
    Unsupervised(#[from] UnsupervisedError),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// A fitted classifier.
pub trait Predictor {
    fn predict(&self, record: &ExperimentRecord) -> Result<u8, ValidationError>;

    /// Feature scaling fitted on the training rows, if any.
    fn standardizer(&self) -> Option<&Standardizer> {
        None
    }
}

/// A deterministic procedure that fits a [`Predictor`] to a table.
pub trait Trainer {
    type Model: Predictor;

    fn fit(&self, train: &ExperimentTable) -> Result<Self::Model, ValidationError>;
}

impl Predictor for LogisticModel {
    fn predict(&self, record: &ExperimentRecord) -> Result<u8, ValidationError> {
        Ok(logistic_predict(self, record)?)
    }

    fn standardizer(&self) -> Option<&Standardizer> {
        Some(&self.standardizer)
    }
}

/// Standardizes the engineered products on the training rows, then fits a
/// logistic model.
#[derive(Debug, Clone, Copy, Default)]
pub struct LogisticTrainer {
    pub options: LogisticOptions,
}

impl Trainer for LogisticTrainer {
    type Model = LogisticModel;

    fn fit(&self, train: &ExperimentTable) -> Result<LogisticModel, ValidationError> {
        let x = train.engineered_matrix();
        let standardizer = Standardizer::fit(&x, &ENGINEERED_FEATURE_NAMES)?;
        let z = standardizer.transform(&x)?;
        Ok(fit_logistic(&z, &train.labels()?, standardizer, self.options)?)
    }
}

/// PCA on the training rows, then a linear SVC on the leading scores.
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct SvcPipeline {
    pub pca: PcaModel,
    pub n_components: usize,
    pub svc: SvcModel,
}

impl SvcPipeline {
    pub fn scores(&self, record: &ExperimentRecord) -> Result<Vec<f64>, ValidationError> {
        Ok(self.pca.project_record(record, self.n_components)?)
    }
}

impl Predictor for SvcPipeline {
    fn predict(&self, record: &ExperimentRecord) -> Result<u8, ValidationError> {
        Ok(svc_predict(&self.svc, &self.scores(record)?)?)
    }

    fn standardizer(&self) -> Option<&Standardizer> {
        Some(&self.pca.standardizer)
    }
}

/// Persisted form of an [`SvcPipeline`] (`"model_type": "svc"`).
#[derive(Debug, Clone, PartialEq, Serialize, serde::Deserialize)]
pub struct SvcDocument {
    pub model_type: String,
    pub w: Vec<f64>,
    pub b: f64,
    pub c: f64,
    pub support_indices: Vec<usize>,
    pub margin_width: f64,
    pub n_components: usize,
    pub pca: PcaModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitSpec>,
}

impl SvcDocument {
    pub const MODEL_TYPE: &'static str = "svc";

    pub fn new(pipeline: &SvcPipeline, split: Option<SplitSpec>) -> Self {
        let svc = &pipeline.svc;
        Self {
            model_type: Self::MODEL_TYPE.into(),
            w: svc.w.clone(),
            b: svc.b,
            c: svc.c,
            support_indices: svc.support_indices.clone(),
            margin_width: svc.margin_width,
            n_components: pipeline.n_components,
            pca: pipeline.pca.clone(),
            split,
        }
    }

    pub fn pipeline(&self) -> SvcPipeline {
        SvcPipeline {
            pca: self.pca.clone(),
            n_components: self.n_components,
            svc: SvcModel {
                w: self.w.clone(),
                b: self.b,
                c: self.c,
                support_indices: self.support_indices.clone(),
                margin_width: self.margin_width,
                dual: Vec::new(),
                iterations: 0,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvcTrainer {
    pub c: f64,
    pub columns: Vec<String>,
    pub n_components: usize,
}

impl Default for SvcTrainer {
    fn default() -> Self {
        Self {
            c: 1.0,
            columns: PCA_COLUMNS.iter().map(|s| s.to_string()).collect(),
            n_components: 2,
        }
    }
}

impl Trainer for SvcTrainer {
    type Model = SvcPipeline;

    fn fit(&self, train: &ExperimentTable) -> Result<SvcPipeline, ValidationError> {
        let labels = train.labels()?;
        let pca = fit_pca(train, &self.columns)?;
        let scores = pca.project_table(train, self.n_components)?;
        let svc = fit_svc(&scores, &labels, self.c)?;
        Ok(SvcPipeline {
            pca,
            n_components: self.n_components,
            svc,
        })
    }
}

/// Confusion matrix and scores of `model` on every row of `test`.
pub fn evaluate_holdout<P: Predictor + ?Sized>(
    model: &P,
    test: &ExperimentTable,
) -> Result<(ConfusionMatrix, Metrics), ValidationError> {
    if test.is_empty() {
        return Err(ValidationError::EmptyTable);
    }
    let actual = test.labels()?;
    let predicted = test
        .records
        .iter()
        .map(|r| model.predict(r))
        .collect::<Result<Vec<_>, _>>()?;
    let cm = confusion(&actual, &predicted)?;
    let m = metrics(&cm)?;
    Ok((cm, m))
}

#[derive(Debug, Clone, PartialEq)]
pub enum FoldOutcome {
    Evaluated {
        confusion: ConfusionMatrix,
        metrics: Metrics,
        /// Scaling the fold's model learned from its training rows.
        standardizer: Option<Standardizer>,
    },
    /// Training rows held a single class; the fold was not scored.
    Skipped { reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    /// 1-based.
    pub run: usize,
    /// 1-based.
    pub fold: usize,
    /// Row indices of the held-out fold, ascending.
    pub test_indices: Vec<usize>,
    pub outcome: FoldOutcome,
}

impl FoldResult {
    pub fn accuracy(&self) -> Option<f64> {
        match &self.outcome {
            FoldOutcome::Evaluated { metrics, .. } => metrics.accuracy.value(),
            FoldOutcome::Skipped { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub k: usize,
    pub runs: usize,
    pub master_seed: u64,
    /// Ordered by run, then fold.
    pub folds: Vec<FoldResult>,
    /// Mean fold accuracy of each run; `None` if every fold was skipped.
    pub run_means: Vec<Option<f64>>,
    /// Mean over all scored folds; `None` if none was scored.
    pub mean_accuracy: Option<f64>,
    /// Sample standard deviation over all scored folds; `None` below two.
    pub std_accuracy: Option<f64>,
    pub warnings: Vec<String>,
}

/// Repeated K-fold cross-validation. Run `r` shuffles with
/// `derive_seed(master_seed, r)`; each fold trains on the other `k − 1`
/// folds. Folds whose training rows hold one class are skipped with a
/// warning; any other trainer error aborts with the run and fold attached.
pub fn cross_validate<T: Trainer + ?Sized>(
    trainer: &T,
    table: &ExperimentTable,
    k: usize,
    runs: usize,
    master_seed: u64,
) -> Result<CvReport, ValidationError> {
    if runs == 0 {
        return Err(ValidationError::BadRuns);
    }
    let labels = table.labels()?;
    let n = table.len();
    let mut folds = Vec::with_capacity(k * runs);
    let mut warnings = Vec::new();
    let mut run_means = Vec::with_capacity(runs);
    let mut all = Vec::new();

    for r in 0..runs {
        let partition = kfold_partition(n, k, derive_seed(master_seed, r as u64))?;
        let mut accs = Vec::with_capacity(k);
        for (f, test_idx) in partition.iter().enumerate() {
            let (run, fold) = (r + 1, f + 1);
            let mut in_test = vec![false; n];
            test_idx.iter().for_each(|&i| in_test[i] = true);
            let train_idx: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();

            let first = labels[train_idx[0]];
            let outcome = if train_idx.iter().all(|&i| labels[i] == first) {
                let reason = format!("run {run}, fold {fold}: training rows contain only class {first}; fold skipped");
                warnings.push(reason.clone());
                FoldOutcome::Skipped { reason }
            } else {
                let annotate = |e: ValidationError| ValidationError::Fold {
                    run,
                    fold,
                    source: Box::new(e),
                };
                let model = trainer.fit(&table.subset(&train_idx)).map_err(annotate)?;
                let (cm, m) = evaluate_holdout(&model, &table.subset(test_idx)).map_err(annotate)?;
                if let Some(a) = m.accuracy.value() {
                    accs.push(a);
                    all.push(a);
                }
                FoldOutcome::Evaluated {
                    confusion: cm,
                    metrics: m,
                    standardizer: model.standardizer().cloned(),
                }
            };
            folds.push(FoldResult {
                run,
                fold,
                test_indices: test_idx.clone(),
                outcome,
            });
        }
        run_means.push(if accs.is_empty() {
            None
        } else {
            Some(accs.iter().sum::<f64>() / accs.len() as f64)
        });
    }

    let (mean_accuracy, std_accuracy) = match all.len() {
        0 => (None, None),
        1 => (Some(all[0]), None),
        _ => {
            let (m, s) = mean_std(&all)?;
            (Some(m), Some(s))
        }
    };
    Ok(CvReport {
        k,
        runs,
        master_seed,
        folds,
        run_means,
        mean_accuracy,
        std_accuracy,
        warnings,
    })
}

fn score_text(s: Score) -> String {
    match s {
        Score::Defined(v) => v.to_string(),
        Score::Undefined => "undefined".into(),
    }
}

impl CvReport {
    /// Per-fold rows `run,fold,n_test,accuracy,precision,threat_score`,
    /// followed by `summary,…` rows with the aggregate figures.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut w = csv::WriterBuilder::new().flexible(true).from_writer(writer);
        w.write_record(["run", "fold", "n_test", "accuracy", "precision", "threat_score"])?;
        for f in &self.folds {
            let (acc, prec, ts) = match &f.outcome {
                FoldOutcome::Evaluated { metrics, .. } => (
                    score_text(metrics.accuracy),
                    score_text(metrics.precision),
                    score_text(metrics.threat_score),
                ),
                FoldOutcome::Skipped { .. } => ("skipped".into(), "skipped".into(), "skipped".into()),
            };
            w.write_record([
                f.run.to_string(),
                f.fold.to_string(),
                f.test_indices.len().to_string(),
                acc,
                prec,
                ts,
            ])?;
        }
        let opt = |v: Option<f64>| v.map_or_else(|| "undefined".to_string(), |v| v.to_string());
        w.write_record(["summary", "k", &self.k.to_string()])?;
        w.write_record(["summary", "runs", &self.runs.to_string()])?;
        w.write_record(["summary", "master_seed", &self.master_seed.to_string()])?;
        for (r, m) in self.run_means.iter().enumerate() {
            w.write_record(["summary", &format!("run_{}_mean_accuracy", r + 1), &opt(*m)])?;
        }
        w.write_record(["summary", "mean_accuracy", &opt(self.mean_accuracy)])?;
        w.write_record(["summary", "std_accuracy", &opt(self.std_accuracy)])?;
        w.write_record(["summary", "standardization", STANDARDIZATION_NOTE])?;
        for warning in &self.warnings {
            w.write_record(["summary", "warning", warning])?;
        }
        w.flush()?;
        Ok(())
    }
}
