//! Command-line front end. Every command reads CSV/JSON inputs, writes its
//! outputs atomically and prints a one-line summary.

mod commands;
mod report;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::dataset::{load_experiments, ExperimentTable, Layout, RecordFilter};
use crate::error::{Error, EXIT_OK, EXIT_USAGE};

pub use report::{ClassifierSection, ClassifierSplitScores, MlrSection, MlrSplitScores, Report, Term};

#[derive(Debug, Parser)]
#[command(name = "onsetml", version, about = "Statistical learning on flume-test tables: regression, classification, PCA, clustering, cross-validation and sensitivity sweeps")]
pub struct Cli {
    /// Master seed for every random choice
    #[arg(long, global = true, env = "ONSETML_SEED", default_value_t = 42)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the synthetic stand-in dataset
    Synth(SynthArgs),
    /// Pearson correlation matrix of selected columns
    Correlate(CorrelateArgs),
    /// Fit a linear regression of a target on the rain-gated products
    TrainMlr(TrainMlrArgs),
    /// Fit the logistic failure model
    TrainLr(TrainLrArgs),
    /// Fit PCA followed by a linear SVC on the leading scores
    TrainSvc(TrainSvcArgs),
    /// Principal component report
    Pca(PcaArgs),
    /// K-means on principal component scores
    Kmeans(KmeansArgs),
    /// Repeated K-fold cross-validation of a classifier
    Crossval(CrossvalArgs),
    /// Standard-deviation sensitivity sweep of a logistic model
    Sweep(SweepArgs),
    /// Train/test evaluation tables for saved models
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LayoutArg {
    #[value(name = "h_top")]
    HTop,
    #[value(name = "h_sub")]
    HSub,
    All,
}

/// Input table and row selection.
#[derive(Debug, Args)]
pub struct RowArgs {
    /// Experiment CSV
    #[arg(long = "in", value_name = "CSV")]
    pub input: PathBuf,
    /// Flume layout to keep (command-specific default)
    #[arg(long, value_enum)]
    pub layout: Option<LayoutArg>,
    /// Keep rows where column=value; repeatable
    #[arg(long = "filter", value_name = "COL=VALUE")]
    pub filters: Vec<String>,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Noise standard deviation as a fraction of each rule's spread
    #[arg(long, default_value_t = 0.2)]
    pub noise: f64,
    #[arg(long, default_value_t = 2.0)]
    pub wev_fine: f64,
    #[arg(long, default_value_t = 1.0)]
    pub wev_medium: f64,
    #[arg(long, default_value_t = 0.5)]
    pub wev_coarse: f64,
}

#[derive(Debug, Args)]
pub struct CorrelateArgs {
    #[command(flatten)]
    pub rows: RowArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated columns (default: all numeric inputs and responses)
    #[arg(long, value_delimiter = ',')]
    pub columns: Vec<String>,
}

#[derive(Debug, Args)]
pub struct TrainMlrArgs {
    #[command(flatten)]
    pub rows: RowArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Response column
    #[arg(long, default_value = "td")]
    pub target: String,
    #[arg(long, default_value_t = 0.35)]
    pub test_fraction: f64,
}

#[derive(Debug, Args)]
pub struct TrainLrArgs {
    #[command(flatten)]
    pub rows: RowArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.35)]
    pub test_fraction: f64,
    /// Do not keep class proportions in the split
    #[arg(long)]
    pub no_stratify: bool,
    /// Learning rate
    #[arg(long, default_value_t = 0.05)]
    pub eta: f64,
    #[arg(long, default_value_t = 50_000)]
    pub max_iter: usize,
    /// Stop once the largest gradient component is below this
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
}

#[derive(Debug, Args)]
pub struct TrainSvcArgs {
    #[command(flatten)]
    pub rows: RowArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.35)]
    pub test_fraction: f64,
    #[arg(long)]
    pub no_stratify: bool,
    /// Regularization strength
    #[arg(long = "c", default_value_t = 1.0)]
    pub c: f64,
    /// PCA input columns
    #[arg(long, value_delimiter = ',')]
    pub columns: Vec<String>,
    #[arg(long, default_value_t = 2)]
    pub components: usize,
}

#[derive(Debug, Args)]
pub struct PcaArgs {
    #[command(flatten)]
    pub rows: RowArgs,
    /// Component report CSV
    #[arg(long)]
    pub out: PathBuf,
    /// Optional per-row score CSV
    #[arg(long)]
    pub scores: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub columns: Vec<String>,
}

#[derive(Debug, Args)]
pub struct KmeansArgs {
    #[command(flatten)]
    pub rows: RowArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = crate::unsupervised::DEFAULT_RESTARTS)]
    pub restarts: usize,
    #[arg(long, value_delimiter = ',')]
    pub columns: Vec<String>,
    #[arg(long, default_value_t = 2)]
    pub components: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassifierArg {
    Lr,
    Svc,
}

#[derive(Debug, Args)]
pub struct CrossvalArgs {
    #[command(flatten)]
    pub rows: RowArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = ClassifierArg::Svc)]
    pub classifier: ClassifierArg,
    #[arg(long, default_value_t = 7)]
    pub folds: usize,
    #[arg(long, default_value_t = 5)]
    pub runs: usize,
    #[arg(long = "c", default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, value_delimiter = ',')]
    pub columns: Vec<String>,
    #[arg(long, default_value_t = 0.05)]
    pub eta: f64,
    #[arg(long, default_value_t = 50_000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub rows: RowArgs,
    /// Logistic model JSON
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// d50, wev, slope, ri or all
    #[arg(long = "var", default_value = "all")]
    pub variable: String,
    /// Half-width of the sweep in standard deviations
    #[arg(long = "range", default_value_t = crate::sensitivity::DEFAULT_RANGE_SD)]
    pub range_sd: f64,
    #[arg(long, default_value_t = crate::sensitivity::DEFAULT_STEP_SD)]
    pub step: f64,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Experiment CSV the models were trained on
    #[arg(long = "in", value_name = "CSV")]
    pub input: PathBuf,
    /// Regression model JSON; repeatable
    #[arg(long)]
    pub mlr: Vec<PathBuf>,
    /// Logistic model JSON
    #[arg(long)]
    pub lr: Option<PathBuf>,
    /// SVC model JSON
    #[arg(long)]
    pub svc: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

/// Runs the tool with process arguments, printing to stdout and stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// As [`run`], with explicit output streams. Returns the exit code.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(&cli) {
        Ok(summary) => {
            let _ = writeln!(out, "{summary}");
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cli: &Cli) -> Result<String, Error> {
    let seed = cli.seed;
    match &cli.command {
        Command::Synth(a) => commands::synth(a, seed),
        Command::Correlate(a) => commands::correlate(a),
        Command::TrainMlr(a) => commands::train_mlr(a, seed),
        Command::TrainLr(a) => commands::train_lr(a, seed),
        Command::TrainSvc(a) => commands::train_svc(a, seed),
        Command::Pca(a) => commands::pca(a),
        Command::Kmeans(a) => commands::kmeans(a, seed),
        Command::Crossval(a) => commands::crossval(a, seed),
        Command::Sweep(a) => commands::sweep(a),
        Command::Report(a) => report::report(a),
    }
}

impl RowArgs {
    /// Layout condition (unless `all`) followed by the user filters.
    fn filter(&self, default_layout: Layout) -> Result<RecordFilter, Error> {
        let mut f = RecordFilter::all();
        match self.layout {
            Some(LayoutArg::All) => {}
            Some(LayoutArg::HTop) => f.push("layout=h_top")?,
            Some(LayoutArg::HSub) => f.push("layout=h_sub")?,
            None => f.push(&format!("layout={default_layout}"))?,
        }
        for spec in &self.filters {
            f.push(spec)?;
        }
        Ok(f)
    }

    /// The full table and the selected rows.
    fn load(&self, default_layout: Layout) -> Result<(ExperimentTable, ExperimentTable, RecordFilter), Error> {
        let table = read_table(&self.input)?;
        let filter = self.filter(default_layout)?;
        let rows = filter.apply(&table);
        if rows.is_empty() {
            return Err(Error::Usage(format!(
                "no rows of {} match '{filter}'",
                self.input.display()
            )));
        }
        Ok((table, rows, filter))
    }
}

fn read_table(path: &Path) -> Result<ExperimentTable, Error> {
    if !path.exists() {
        return Err(Error::MissingArtifact(path.to_path_buf()));
    }
    Ok(load_experiments(path, None)?)
}

/// Reads a model document, checking its `model_type`.
fn read_model<T: DeserializeOwned>(path: &Path, model_type: &str) -> Result<T, Error> {
    if !path.exists() {
        return Err(Error::MissingArtifact(path.to_path_buf()));
    }
    let bad = |message: String| Error::BadArtifact {
        path: path.to_path_buf(),
        message,
    };
    let value: serde_json::Value = serde_json::from_reader(File::open(path)?).map_err(|e| bad(e.to_string()))?;
    match value.get("model_type").and_then(|v| v.as_str()) {
        Some(t) if t == model_type => {}
        Some(t) => return Err(bad(format!("expected a {model_type} model, found {t}"))),
        None => return Err(bad("no model_type field".into())),
    }
    serde_json::from_value(value).map_err(|e| bad(e.to_string()))
}

/// Writes through a temporary file in the target directory, renamed into
/// place only once `fill` succeeds.
fn write_atomic<F>(path: &Path, fill: F) -> Result<(), Error>
where
    F: FnOnce(&mut BufWriter<&mut File>) -> Result<(), Error>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::Builder::new().prefix(".onsetml-").tempfile_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        fill(&mut w)?;
        w.flush()?;
    }
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644))?;
    }
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Error> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}
