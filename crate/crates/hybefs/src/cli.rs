//! Command-line front end: the cross-validated experiment runner, synthetic
//! dataset generation, and one-shot feature ranking.
//!
//! `run` reads a JSON config, executes the full protocol, and writes
//! plot-ready CSVs plus a manifest that reproduces the run. `synth` writes a
//! dataset with known informative features. `rank` applies one strategy to a
//! whole dataset without cross-validation, for exploratory feature lists.
//!
//! Failures exit with 1 for configuration problems, 2 for dataset problems,
//! and 3 for runtime failures; messages name the offending field or file.

use std::env;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{
    DEFAULT_LABEL_COLUMN, DataError, ExpressionMatrix, LoadOptions, SyntheticSpec, fmt_f64,
    generate_synthetic, load_csv, write_csv,
};
use crate::evaluation::{
    EvalError, ExperimentConfig, ExperimentResult, GbmParams, default_thresholds, run_experiment,
};
use crate::rankers::FeatureRanking;
use crate::stability::is_high_stability;
use crate::strategies::{
    StrategyError, StrategyOutput, StrategySpec, builtin_roster, roster_spec, run_strategy,
};

/// Seed used when neither the command line nor the config names one.
pub const DEFAULT_SEED: u64 = 42;

/// Environment variable consulted for the worker count when no flag or
/// config field sets one.
pub const WORKERS_ENV_VAR: &str = "HYBEFS_WORKERS";

/// A failed command, classified by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// The command line or config file is invalid; exit code 1.
    #[error("{0}")]
    Config(String),
    /// The dataset cannot be read or is malformed; exit code 2.
    #[error("{0}")]
    Data(String),
    /// The run itself failed; exit code 3.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    /// Process exit code for this failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Data(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::NoStrategies
            | EvalError::DuplicateLabel(_)
            | EvalError::DuplicateThreshold(_)
            | EvalError::Strategy(_) => CliError::Config(e.to_string()),
            EvalError::Data(_) | EvalError::Resample(_) => CliError::Data(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<StrategyError> for CliError {
    fn from(e: StrategyError) -> Self {
        match e {
            StrategyError::Data(_) | StrategyError::Resample(_) => CliError::Data(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "hybefs",
    version,
    about = "Hybrid ensemble feature selection over labeled expression matrices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the cross-validated evaluation protocol described by a JSON config.
    Run(RunArgs),
    /// Generate a synthetic dataset with planted informative features.
    Synth(SynthArgs),
    /// Rank all features of a dataset with one strategy, without folds.
    Rank(RankArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file describing the dataset, strategies, and sweep.
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Master seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker thread count; overrides the config and HYBEFS_WORKERS.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory; overrides the config.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Number of samples.
    #[arg(long)]
    samples: usize,
    /// Total number of features.
    #[arg(long)]
    features: usize,
    /// Number of informative features.
    #[arg(long)]
    informative: usize,
    /// Class-mean shift of informative features, in within-class standard
    /// deviations.
    #[arg(long)]
    effect: f64,
    /// Fraction of samples labeled 1.
    #[arg(long, default_value_t = 0.5)]
    balance: f64,
    /// Generator seed.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Dataset CSV to write; planted.txt lands in the same directory.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
}

#[derive(Args)]
struct RankArgs {
    /// Dataset CSV with one row per sample and a binary label column.
    #[arg(long, value_name = "FILE")]
    data: PathBuf,
    /// Name of a built-in strategy, for example Hyb-EFS-Borda.
    #[arg(long)]
    strategy: String,
    /// Ranking CSV to write.
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Selection size for strategies that aggregate per threshold.
    #[arg(long)]
    threshold: Option<usize>,
    /// Seed for bootstrap-based strategies.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Header name of the label column.
    #[arg(long, default_value = DEFAULT_LABEL_COLUMN)]
    label_column: String,
    /// Treat the first column as a sample identifier, not a feature.
    #[arg(long)]
    ignore_sample_id: bool,
}

/// Where a run's dataset comes from.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DatasetConfig {
    /// Load a CSV file from disk.
    Csv(CsvDataset),
    /// Generate data in memory from a synthetic recipe.
    Synthetic(SyntheticSpec),
}

/// CSV dataset settings inside a run config.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsvDataset {
    /// Path to the CSV file.
    pub path: PathBuf,
    /// Header name of the label column.
    #[serde(default = "default_label_column")]
    pub label_column: String,
    /// Treat the first column as a sample identifier, not a feature.
    #[serde(default)]
    pub ignore_sample_id: bool,
}

fn default_label_column() -> String {
    DEFAULT_LABEL_COLUMN.to_string()
}

/// One entry of the config's strategy list: a built-in roster name or a
/// fully specified custom strategy.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StrategyEntry {
    /// Name of a built-in strategy.
    Name(String),
    /// Inline custom strategy.
    Custom(StrategySpec),
}

/// Classifier hyperparameters inside a run config.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GbmConfig {
    /// Number of boosting rounds.
    #[serde(default = "default_n_trees")]
    pub n_trees: usize,
    /// Maximum tree depth.
    #[serde(default = "default_max_depth")]
    pub max_depth: usize,
    /// Shrinkage applied to every tree.
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    /// Minimum number of samples on each side of a split.
    #[serde(default = "default_min_leaf")]
    pub min_leaf: usize,
}

fn default_n_trees() -> usize {
    GbmParams::default().n_trees
}

fn default_max_depth() -> usize {
    GbmParams::default().max_depth
}

fn default_learning_rate() -> f64 {
    GbmParams::default().learning_rate
}

fn default_min_leaf() -> usize {
    GbmParams::default().min_leaf
}

impl Default for GbmConfig {
    fn default() -> Self {
        GbmParams::default().into()
    }
}

impl From<GbmParams> for GbmConfig {
    fn from(p: GbmParams) -> Self {
        Self {
            n_trees: p.n_trees,
            max_depth: p.max_depth,
            learning_rate: p.learning_rate,
            min_leaf: p.min_leaf,
        }
    }
}

impl From<GbmConfig> for GbmParams {
    fn from(c: GbmConfig) -> Self {
        Self {
            n_trees: c.n_trees,
            max_depth: c.max_depth,
            learning_rate: c.learning_rate,
            min_leaf: c.min_leaf,
        }
    }
}

/// Everything a `run` invocation needs, as read from its JSON config file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Dataset to evaluate on.
    pub dataset: DatasetConfig,
    /// Strategies to run; the full built-in roster when omitted.
    #[serde(default)]
    pub strategies: Option<Vec<StrategyEntry>>,
    /// Number of stratified folds.
    #[serde(default = "default_k_folds")]
    pub k_folds: usize,
    /// Selection sizes to sweep; 1-50 plus 75, 100, 200, 500 when omitted.
    #[serde(default)]
    pub thresholds: Option<Vec<usize>>,
    /// Master seed; the --seed flag wins over this.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Worker thread count; the --workers flag wins over this.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Output directory; the --out flag wins over this.
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Classifier hyperparameters.
    #[serde(default)]
    pub gbm: GbmConfig,
}

fn default_k_folds() -> usize {
    5
}

/// Parses `args` and runs the selected command, returning the process exit
/// code: 0 on success, 1 for config errors, 2 for data errors, 3 for
/// runtime failures.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(&args),
        Command::Synth(args) => cmd_synth(&args),
        Command::Rank(args) => cmd_rank(&args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.config).map_err(|e| {
        CliError::Config(format!(
            "cannot read config file {}: {e}",
            args.config.display()
        ))
    })?;
    let config: RunConfig = serde_json::from_str(&text).map_err(|e| {
        CliError::Config(format!("config file {}: {e}", args.config.display()))
    })?;

    if config.k_folds < 2 {
        return Err(CliError::Config(format!(
            "k_folds = {} must be at least 2",
            config.k_folds
        )));
    }
    let specs = resolve_strategies(config.strategies.as_deref())?;
    for spec in &specs {
        spec.validate()
            .map_err(|e| CliError::Config(format!("strategy {}: {e}", spec.label)))?;
    }
    for (i, spec) in specs.iter().enumerate() {
        if specs[..i].iter().any(|other| other.label == spec.label) {
            return Err(CliError::Config(format!(
                "duplicate strategy label {:?}",
                spec.label
            )));
        }
    }

    let seed = args.seed.or(config.seed).unwrap_or(DEFAULT_SEED);
    let workers = resolve_workers(args.workers, config.workers, env_workers()?)?;
    let out_dir = args
        .out
        .clone()
        .or_else(|| config.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));

    let data = load_dataset(&config.dataset)?;
    let thresholds = config.thresholds.clone().unwrap_or_else(default_thresholds);
    validate_thresholds(&thresholds, data.n_features())?;

    let experiment = ExperimentConfig {
        k_folds: config.k_folds,
        thresholds,
        seed,
        gbm: config.gbm.clone().into(),
    };
    let started = Instant::now();
    let result = with_worker_pool(workers, || run_experiment(&data, &specs, &experiment))??;
    let wall_time_seconds = started.elapsed().as_secs_f64();

    let dataset_name = dataset_name(&config.dataset);
    write_run_outputs(&out_dir, &dataset_name, data.feature_names(), &specs, &result)?;
    write_manifest(
        &out_dir,
        &config.dataset,
        &specs,
        &experiment,
        workers,
        wall_time_seconds,
    )
}

fn cmd_synth(args: &SynthArgs) -> Result<(), CliError> {
    let spec = SyntheticSpec {
        n_samples: args.samples,
        n_features: args.features,
        n_informative: args.informative,
        effect_size: args.effect,
        class_balance: args.balance,
        seed: args.seed,
    };
    let (matrix, planted) =
        generate_synthetic(&spec).map_err(|e| CliError::Config(e.to_string()))?;
    write_csv(&matrix, &args.out).map_err(|e| CliError::Runtime(e.to_string()))?;

    let planted_path = args.out.with_file_name("planted.txt");
    let mut listing = String::new();
    for idx in planted {
        listing.push_str(&matrix.feature_names()[idx]);
        listing.push('\n');
    }
    fs::write(&planted_path, listing).map_err(|e| {
        CliError::Runtime(format!("cannot write {}: {e}", planted_path.display()))
    })
}

fn cmd_rank(args: &RankArgs) -> Result<(), CliError> {
    let spec = roster_spec(&args.strategy).ok_or_else(|| {
        let known: Vec<String> = builtin_roster().into_iter().map(|s| s.label).collect();
        CliError::Config(format!(
            "unknown strategy {:?}; built-in strategies: {}",
            args.strategy,
            known.join(", ")
        ))
    })?;
    let options = LoadOptions {
        label_column: args.label_column.clone(),
        ignore_sample_id: args.ignore_sample_id,
    };
    let data = load_csv(&args.data, &options)?;

    let thresholds: Vec<usize> = if spec.is_threshold_parametric() {
        let threshold = args.threshold.ok_or_else(|| {
            CliError::Config(format!(
                "strategy {} aggregates per selection size; pass --threshold",
                spec.label
            ))
        })?;
        validate_thresholds(&[threshold], data.n_features())?;
        vec![threshold]
    } else {
        if args.threshold.is_some() {
            return Err(CliError::Config(format!(
                "--threshold only applies to stability-weighted strategies; {} produces a single ranking",
                spec.label
            )));
        }
        Vec::new()
    };

    let output = run_strategy(&data, &spec, &thresholds, args.seed)?;
    let ranking = match &output {
        StrategyOutput::Single(r) => r,
        StrategyOutput::PerThreshold(list) => &list[0].1,
    };
    write_ranking_csv(&args.out, data.feature_names(), ranking)
}

fn resolve_strategies(entries: Option<&[StrategyEntry]>) -> Result<Vec<StrategySpec>, CliError> {
    let Some(entries) = entries else {
        return Ok(builtin_roster());
    };
    entries
        .iter()
        .map(|entry| match entry {
            StrategyEntry::Name(name) => roster_spec(name).ok_or_else(|| {
                let known: Vec<String> =
                    builtin_roster().into_iter().map(|s| s.label).collect();
                CliError::Config(format!(
                    "unknown strategy {name:?}; built-in strategies: {}",
                    known.join(", ")
                ))
            }),
            StrategyEntry::Custom(spec) => Ok(spec.clone()),
        })
        .collect()
}

/// Resolves the worker count: flag, then config, then environment. `None`
/// leaves the thread count to the runtime default.
fn resolve_workers(
    flag: Option<usize>,
    config: Option<usize>,
    environment: Option<usize>,
) -> Result<Option<usize>, CliError> {
    let workers = flag.or(config).or(environment);
    if workers == Some(0) {
        return Err(CliError::Config("workers must be at least 1".to_string()));
    }
    Ok(workers)
}

fn env_workers() -> Result<Option<usize>, CliError> {
    match env::var(WORKERS_ENV_VAR) {
        Ok(value) => value.parse::<usize>().map(Some).map_err(|_| {
            CliError::Config(format!(
                "{WORKERS_ENV_VAR} must be a number, got {value:?}"
            ))
        }),
        Err(env::VarError::NotPresent) => Ok(None),
        Err(env::VarError::NotUnicode(_)) => Err(CliError::Config(format!(
            "{WORKERS_ENV_VAR} is not valid unicode"
        ))),
    }
}

fn with_worker_pool<R>(
    workers: Option<usize>,
    job: impl FnOnce() -> R + Send,
) -> Result<R, CliError>
where
    R: Send,
{
    match workers {
        None => Ok(job()),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Runtime(format!("cannot build worker pool: {e}")))
            .map(|pool| pool.install(job)),
    }
}

fn load_dataset(dataset: &DatasetConfig) -> Result<ExpressionMatrix, CliError> {
    match dataset {
        DatasetConfig::Csv(csv) => {
            let options = LoadOptions {
                label_column: csv.label_column.clone(),
                ignore_sample_id: csv.ignore_sample_id,
            };
            Ok(load_csv(&csv.path, &options)?)
        }
        DatasetConfig::Synthetic(spec) => generate_synthetic(spec)
            .map(|(matrix, _)| matrix)
            .map_err(|e| CliError::Config(format!("dataset: {e}"))),
    }
}

fn dataset_name(dataset: &DatasetConfig) -> String {
    match dataset {
        DatasetConfig::Csv(csv) => csv
            .path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| csv.path.display().to_string()),
        DatasetConfig::Synthetic(_) => "synthetic".to_string(),
    }
}

fn validate_thresholds(thresholds: &[usize], n_features: usize) -> Result<(), CliError> {
    if thresholds.is_empty() {
        return Err(CliError::Config("thresholds must not be empty".to_string()));
    }
    for (i, &threshold) in thresholds.iter().enumerate() {
        if threshold == 0 || threshold >= n_features {
            return Err(CliError::Config(format!(
                "threshold {threshold} out of range: the dataset has {n_features} features, so valid selection sizes are 1..={}",
                n_features - 1
            )));
        }
        if thresholds[..i].contains(&threshold) {
            return Err(CliError::Config(format!(
                "threshold {threshold} appears more than once"
            )));
        }
    }
    Ok(())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, CliError> {
    let file = fs::File::create(path)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

fn flush_csv(mut writer: csv::Writer<fs::File>, path: &Path) -> Result<(), CliError> {
    writer
        .flush()
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn write_record(
    writer: &mut csv::Writer<fs::File>,
    path: &Path,
    record: &[String],
) -> Result<(), CliError> {
    writer
        .write_record(record)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn write_run_outputs(
    out_dir: &Path,
    dataset_name: &str,
    feature_names: &[String],
    specs: &[StrategySpec],
    result: &ExperimentResult,
) -> Result<(), CliError> {
    fs::create_dir_all(out_dir).map_err(|e| {
        CliError::Runtime(format!("cannot create {}: {e}", out_dir.display()))
    })?;

    let metrics_path = out_dir.join("metrics.csv");
    let mut writer = csv_writer(&metrics_path)?;
    write_record(
        &mut writer,
        &metrics_path,
        &[
            "dataset".to_string(),
            "strategy".to_string(),
            "fold".to_string(),
            "threshold".to_string(),
            "roc_auc".to_string(),
            "pr_auc".to_string(),
        ],
    )?;
    for r in &result.metrics {
        write_record(
            &mut writer,
            &metrics_path,
            &[
                dataset_name.to_string(),
                r.strategy.clone(),
                r.fold.to_string(),
                r.threshold.to_string(),
                fmt_f64(r.roc_auc),
                fmt_f64(r.pr_auc),
            ],
        )?;
    }
    flush_csv(writer, &metrics_path)?;

    let stability_path = out_dir.join("stability.csv");
    let mut writer = csv_writer(&stability_path)?;
    write_record(
        &mut writer,
        &stability_path,
        &[
            "dataset".to_string(),
            "strategy".to_string(),
            "threshold".to_string(),
            "kuncheva".to_string(),
            "high_stability_flag".to_string(),
        ],
    )?;
    for r in &result.stability {
        write_record(
            &mut writer,
            &stability_path,
            &[
                dataset_name.to_string(),
                r.strategy.clone(),
                r.threshold.to_string(),
                fmt_f64(r.kuncheva),
                is_high_stability(r.kuncheva).to_string(),
            ],
        )?;
    }
    flush_csv(writer, &stability_path)?;

    for (fold, outputs) in result.fold_outputs.iter().enumerate() {
        for (spec, output) in specs.iter().zip(outputs) {
            let dir = out_dir.join("rankings").join(&spec.label);
            fs::create_dir_all(&dir).map_err(|e| {
                CliError::Runtime(format!("cannot create {}: {e}", dir.display()))
            })?;
            match output {
                StrategyOutput::Single(ranking) => {
                    let path = dir.join(format!("fold{fold}.csv"));
                    write_ranking_csv(&path, feature_names, ranking)?;
                }
                StrategyOutput::PerThreshold(list) => {
                    for (threshold, ranking) in list {
                        let path = dir.join(format!("fold{fold}_th{threshold}.csv"));
                        write_ranking_csv(&path, feature_names, ranking)?;
                    }
                }
            }
        }
    }
    Ok(())
}

fn write_ranking_csv(
    path: &Path,
    feature_names: &[String],
    ranking: &FeatureRanking,
) -> Result<(), CliError> {
    let mut writer = csv_writer(path)?;
    write_record(
        &mut writer,
        path,
        &[
            "rank".to_string(),
            "feature".to_string(),
            "score".to_string(),
        ],
    )?;
    for (position, &feature) in ranking.order().iter().enumerate() {
        write_record(
            &mut writer,
            path,
            &[
                (position + 1).to_string(),
                feature_names[feature].clone(),
                fmt_f64(ranking.scores()[feature]),
            ],
        )?;
    }
    flush_csv(writer, path)
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'static str,
    seed: u64,
    k_folds: usize,
    thresholds: &'a [usize],
    workers: Option<usize>,
    dataset: &'a DatasetConfig,
    strategies: &'a [StrategySpec],
    gbm: GbmConfig,
    wall_time_seconds: f64,
}

fn write_manifest(
    out_dir: &Path,
    dataset: &DatasetConfig,
    specs: &[StrategySpec],
    experiment: &ExperimentConfig,
    workers: Option<usize>,
    wall_time_seconds: f64,
) -> Result<(), CliError> {
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        seed: experiment.seed,
        k_folds: experiment.k_folds,
        thresholds: &experiment.thresholds,
        workers,
        dataset,
        strategies: specs,
        gbm: experiment.gbm.clone().into(),
        wall_time_seconds,
    };
    let path = out_dir.join("run_manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CliError::Runtime(format!("cannot serialize manifest: {e}")))?;
    text.push('\n');
    fs::write(&path, text)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}
