use std::path::Path;

use super::{
    read_model, write_atomic, write_json, ClassifierArg, CorrelateArgs, CrossvalArgs, KmeansArgs, PcaArgs,
    SweepArgs, SynthArgs, TrainLrArgs, TrainMlrArgs, TrainSvcArgs,
};
use crate::classify::{LogisticDocument, LogisticOptions};
use crate::dataset::{
    correlation_matrix, resolve_column, synth_generate, write_experiments, Layout, RecordFilter,
    SplitSpec, SynthDesign, WevBySoil, CORRELATION_COLUMNS, ENGINEERED_FEATURE_NAMES,
};
use crate::error::Error;
use crate::regression::{fit_mlr, mse, r2, MlrDocument};
use crate::sensitivity::{sweep_all, write_curves_csv, SweepGrid, Variable};
use crate::unsupervised::{align_clusters_to_labels, fit_pca, kmeans as run_kmeans, write_cluster_csv, PCA_COLUMNS};
use crate::validation::{
    cross_validate, evaluate_holdout, LogisticTrainer, SvcDocument, SvcTrainer, Trainer,
};

fn columns_or(given: &[String], default: &[&str]) -> Vec<String> {
    if given.is_empty() {
        default.iter().map(|s| s.to_string()).collect()
    } else {
        given.to_vec()
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".into(), |v| format!("{v:.4}"))
}

pub(super) fn synth(a: &SynthArgs, seed: u64) -> Result<String, Error> {
    let wev = WevBySoil {
        fine: a.wev_fine,
        medium: a.wev_medium,
        coarse: a.wev_coarse,
    };
    let table = synth_generate(&SynthDesign::default(), &wev, a.noise, seed)?;
    write_atomic(&a.out, |w| Ok(write_experiments(&table, w)?))?;
    let sub = table.with_layout(Layout::HSub);
    let failures = sub.records.iter().filter(|r| r.failure == Some(1)).count();
    Ok(format!(
        "synth: {} records ({} h_sub, {failures} failures) -> {} [seed {seed}]",
        table.len(),
        sub.len(),
        a.out.display()
    ))
}

pub(super) fn correlate(a: &CorrelateArgs) -> Result<String, Error> {
    let (_, rows, filter) = a.rows.load(Layout::HTop)?;
    let columns = columns_or(&a.columns, &CORRELATION_COLUMNS);
    let corr = correlation_matrix(&rows, &columns)?;
    write_atomic(&a.out, |w| Ok(corr.write_csv(w)?))?;
    Ok(format!(
        "correlate: {}x{} matrix over {} rows ({filter}) -> {}",
        columns.len(),
        columns.len(),
        rows.len(),
        a.out.display()
    ))
}

fn split_spec(filter: &RecordFilter, test_fraction: f64, seed: u64, stratify: bool) -> SplitSpec {
    SplitSpec {
        rows: filter.to_string(),
        test_fraction,
        seed,
        stratify_on: stratify.then(|| "failure".to_string()),
    }
}

pub(super) fn train_mlr(a: &TrainMlrArgs, seed: u64) -> Result<String, Error> {
    let (table, _, filter) = a.rows.load(Layout::HTop)?;
    let target = resolve_column(&a.target)?;
    let spec = split_spec(&filter, a.test_fraction, seed, false);
    let (train, test) = spec.apply(&table)?;

    let x = train.engineered_matrix();
    let y = train.column(target)?;
    let model = fit_mlr(&x, &y, &ENGINEERED_FEATURE_NAMES, target)?;
    let fitted = model.predict_matrix(&x)?;
    let (train_r2, train_mse) = (r2(&y, &fitted)?, mse(&y, &fitted)?);

    let yt = test.column(target)?;
    let pt = model.predict_matrix(&test.engineered_matrix())?;
    let test_r2 = r2(&yt, &pt).ok();

    write_json(&a.out, &MlrDocument::new(&model, train_r2, train_mse, Some(spec)))?;
    let c = &model.coefficients;
    Ok(format!(
        "train-mlr: {target} = {:.4} + {:.4}*x1 + {:.4}*x2 + {:.4}*x3; R2 train {train_r2:.4} test {}; {} train / {} test rows -> {}",
        model.intercept,
        c[0],
        c[1],
        c[2],
        fmt_opt(test_r2),
        train.len(),
        test.len(),
        a.out.display()
    ))
}

pub(super) fn train_lr(a: &TrainLrArgs, seed: u64) -> Result<String, Error> {
    let (table, _, filter) = a.rows.load(Layout::HSub)?;
    let spec = split_spec(&filter, a.test_fraction, seed, !a.no_stratify);
    let (train, test) = spec.apply(&table)?;
    let trainer = LogisticTrainer {
        options: LogisticOptions {
            eta: a.eta,
            max_iter: a.max_iter,
            tol: a.tol,
        },
    };
    let model = trainer.fit(&train)?.with_threshold(a.threshold)?;
    let (_, test_m) = evaluate_holdout(&model, &test)?;
    write_json(&a.out, &LogisticDocument::new(&model, Some(spec)))?;
    let c = &model.coefficients;
    Ok(format!(
        "train-lr: logit = {:.4} + {:.4}*z1 + {:.4}*z2 + {:.4}*z3; {} after {} iterations; test accuracy {} precision {} -> {}",
        model.intercept,
        c[0],
        c[1],
        c[2],
        if model.meta.converged { "converged" } else { "not converged" },
        model.meta.iterations,
        fmt_opt(test_m.accuracy.value()),
        fmt_opt(test_m.precision.value()),
        a.out.display()
    ))
}

pub(super) fn train_svc(a: &TrainSvcArgs, seed: u64) -> Result<String, Error> {
    let (table, _, filter) = a.rows.load(Layout::HSub)?;
    let spec = split_spec(&filter, a.test_fraction, seed, !a.no_stratify);
    let (train, test) = spec.apply(&table)?;
    let trainer = SvcTrainer {
        c: a.c,
        columns: columns_or(&a.columns, &PCA_COLUMNS),
        n_components: a.components,
    };
    let pipeline = trainer.fit(&train)?;
    let (_, test_m) = evaluate_holdout(&pipeline, &test)?;
    write_json(&a.out, &SvcDocument::new(&pipeline, Some(spec)))?;
    Ok(format!(
        "train-svc: C={} margin width {:.4}, {} support vectors; test accuracy {} precision {} -> {}",
        a.c,
        pipeline.svc.margin_width,
        pipeline.svc.support_indices.len(),
        fmt_opt(test_m.accuracy.value()),
        fmt_opt(test_m.precision.value()),
        a.out.display()
    ))
}

fn write_scores(path: &Path, scores: &crate::numerics::Matrix) -> Result<(), Error> {
    write_atomic(path, |w| {
        let mut c = csv::Writer::from_writer(w);
        let mut header = vec!["row".to_string()];
        header.extend((1..=scores.cols()).map(|j| format!("z{j}")));
        c.write_record(&header)?;
        for (i, row) in scores.row_iter().enumerate() {
            let mut rec = vec![(i + 1).to_string()];
            rec.extend(row.iter().map(f64::to_string));
            c.write_record(&rec)?;
        }
        c.flush()?;
        Ok(())
    })
}

pub(super) fn pca(a: &PcaArgs) -> Result<String, Error> {
    let (_, rows, filter) = a.rows.load(Layout::HSub)?;
    let columns = columns_or(&a.columns, &PCA_COLUMNS);
    let model = fit_pca(&rows, &columns)?;
    write_atomic(&a.out, |w| Ok(model.write_report(w)?))?;
    if let Some(path) = &a.scores {
        write_scores(path, &model.project_table(&rows, model.n_components())?)?;
    }
    let two = model.cumulative.get(1).or(model.cumulative.last()).copied().unwrap_or(0.0);
    Ok(format!(
        "pca: {} columns over {} rows ({filter}); first two components explain {:.1}% -> {}",
        columns.len(),
        rows.len(),
        100.0 * two,
        a.out.display()
    ))
}

pub(super) fn kmeans(a: &KmeansArgs, seed: u64) -> Result<String, Error> {
    let (_, rows, filter) = a.rows.load(Layout::HSub)?;
    let columns = columns_or(&a.columns, &PCA_COLUMNS);
    let model = fit_pca(&rows, &columns)?;
    let scores = model.project_table(&rows, a.components)?;
    let result = run_kmeans(&scores, a.k, seed, a.restarts)?;
    let labels = rows.labels().ok();
    write_atomic(&a.out, |w| {
        Ok(write_cluster_csv(w, &scores, &result.assignments, labels.as_deref())?)
    })?;
    let agreement = match &labels {
        Some(l) if a.k == 2 => {
            let al = align_clusters_to_labels(&result.assignments, l)?;
            format!("; {} of {} points disagree with failure labels", al.mismatch_count(), l.len())
        }
        _ => String::new(),
    };
    Ok(format!(
        "kmeans: k={} on {} rows ({filter}), inertia {:.4}{agreement} -> {}",
        a.k,
        rows.len(),
        result.inertia,
        a.out.display()
    ))
}

pub(super) fn crossval(a: &CrossvalArgs, seed: u64) -> Result<String, Error> {
    let (_, rows, filter) = a.rows.load(Layout::HSub)?;
    let report = match a.classifier {
        ClassifierArg::Lr => {
            let trainer = LogisticTrainer {
                options: LogisticOptions {
                    eta: a.eta,
                    max_iter: a.max_iter,
                    tol: a.tol,
                },
            };
            cross_validate(&trainer, &rows, a.folds, a.runs, seed)?
        }
        ClassifierArg::Svc => {
            let trainer = SvcTrainer {
                c: a.c,
                columns: columns_or(&a.columns, &PCA_COLUMNS),
                n_components: 2,
            };
            cross_validate(&trainer, &rows, a.folds, a.runs, seed)?
        }
    };
    write_atomic(&a.out, |w| Ok(report.write_csv(w)?))?;
    Ok(format!(
        "crossval: {} {}-fold x {} runs on {} rows ({filter}); mean accuracy {} (sd {}), {} skipped folds -> {}",
        match a.classifier {
            ClassifierArg::Lr => "lr",
            ClassifierArg::Svc => "svc",
        },
        a.folds,
        a.runs,
        rows.len(),
        fmt4(report.mean_accuracy),
        fmt4(report.std_accuracy),
        report.warnings.len(),
        a.out.display()
    ))
}

fn fmt4(v: Option<f64>) -> String {
    v.map_or_else(|| "undefined".into(), |v| format!("{v:.4}"))
}

pub(super) fn sweep(a: &SweepArgs) -> Result<String, Error> {
    let doc: LogisticDocument = read_model(&a.model, LogisticDocument::MODEL_TYPE)?;
    let model = doc.model();
    let table = super::read_table(&a.rows.input)?;
    let filter = a.rows.filter(Layout::HSub)?;
    let grid = SweepGrid {
        range_sd: a.range_sd,
        step: a.step,
    };
    let mut curves = sweep_all(&model, &table, grid, &filter)?;
    if !a.variable.eq_ignore_ascii_case("all") {
        let v: Variable = a.variable.parse()?;
        curves.retain(|c| c.variable == v);
    }
    write_atomic(&a.out, |w| Ok(write_curves_csv(w, &curves)?))?;
    let rises: Vec<String> = curves
        .iter()
        .map(|c| format!("{} {:+.4}", c.variable, c.rise()))
        .collect();
    Ok(format!(
        "sweep: {} curve(s) x {} points ({filter}); rise {} -> {}",
        curves.len(),
        curves.first().map_or(0, |c| c.samples.len()),
        rises.join(", "),
        a.out.display()
    ))
}
