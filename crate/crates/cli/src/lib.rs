//! Command-line front end for the rainfall forecasting pipeline.
//!
//! Every subcommand writes its artifacts under `--out` and nowhere else.

pub mod commands;
pub mod config;

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Process exit status for success.
pub const EXIT_OK: i32 = 0;
/// Runtime or numeric failure.
pub const EXIT_RUNTIME: i32 = 1;
/// Bad arguments, unreadable config or missing inputs.
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) => write!(f, "usage error: {msg}"),
            CliError::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<dwrpm_core::Error> for CliError {
    fn from(e: dwrpm_core::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

#[derive(Debug, Parser)]
#[command(name = "dwrpm", version, about = "Daily rainfall forecasting with a deep & wide network and its baselines")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clean gauge records and write a windowed dataset cache.
    Ingest(IngestArgs),
    /// Generate a synthetic station network in the ingest format.
    Synth(SynthArgs),
    /// Train a model on a dataset cache.
    Train(TrainArgs),
    /// Score a checkpoint on one split of a dataset cache.
    Evaluate(EvaluateArgs),
    /// Forecast the day after each station's last record.
    Predict(PredictArgs),
    /// Tabulate evaluation reports side by side.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Flat `key = value` config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for every artifact of the command.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub common: Common,
    /// Records file: `station_id,date,rainfall_mm`.
    #[arg(long)]
    pub records: Option<PathBuf>,
    /// Stations file: `station_id,name,district,zone,latitude,longitude`.
    #[arg(long)]
    pub stations: Option<PathBuf>,
    /// Input window length in days.
    #[arg(long)]
    pub seq_len: Option<usize>,
    /// Training years, e.g. `1957-2006`.
    #[arg(long)]
    pub train_years: Option<config::YearRange>,
    #[arg(long)]
    pub val_years: Option<config::YearRange>,
    #[arg(long)]
    pub test_years: Option<config::YearRange>,
    /// Accept station coordinates outside the Rajasthan bounding box.
    #[arg(long)]
    pub relax_bounds: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: Common,
    /// Number of stations.
    #[arg(long = "stations", default_value_t = 20)]
    pub n_stations: usize,
    /// Whole calendar years to generate.
    #[arg(long, default_value_t = 10)]
    pub years: usize,
    #[arg(long, default_value_t = 2008)]
    pub start_year: i32,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    /// Dataset cache written by `ingest`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// dwrpm, mlp, cnn or lstm.
    #[arg(long)]
    pub arch: Option<String>,
    /// Expected window length; must match the dataset cache.
    #[arg(long)]
    pub seq_len: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Stop after this many epochs without a validation improvement.
    #[arg(long)]
    pub patience: Option<usize>,
    /// Clip gradients to this global L2 norm.
    #[arg(long)]
    pub clip_norm: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// train, val or test.
    #[arg(long)]
    pub split: Option<String>,
    /// Also score the all-zeros and day-of-year climatology forecasters.
    #[arg(long)]
    pub baselines: bool,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub records: Option<PathBuf>,
    #[arg(long)]
    pub stations: Option<PathBuf>,
    #[arg(long)]
    pub relax_bounds: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    /// Output directory for the comparison table.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Evaluation report JSON files.
    pub reports: Vec<PathBuf>,
    /// Display names, one per report, in the same order.
    #[arg(long, value_delimiter = ',')]
    pub names: Vec<String>,
}

/// Runs one parsed command line.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Ingest(a) => commands::ingest(&a),
        Command::Synth(a) => commands::synth(&a),
        Command::Train(a) => commands::train(&a),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Predict(a) => commands::predict(&a),
        Command::Compare(a) => commands::compare(&a),
    }
}
