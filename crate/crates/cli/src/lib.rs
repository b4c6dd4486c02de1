//! `fsnc`: generate synthetic graphs, pretrain encoders, run the few-shot
//! evaluation protocol, sweep the joint-loss mixture, score clusterings,
//! export embeddings and run the gradient checks.
//!
//! Exit codes: 0 on success, 1 for usage or validation errors, 2 for
//! runtime failures.

mod commands;
pub use commands::{load_dataset_named, resolve_dataset};
pub mod config;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub use config::{parse_config, ConfigError, RunConfig};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] fsnc_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 1,
            CliError::Core(e) if e.is_validation() => 1,
            CliError::Core(_) | CliError::Failed(_) => 2,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "fsnc", version, about = "Few-shot node classification benchmark")]
pub struct Cli {
    /// Base seed; every random stream derives from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Configuration file of `key = value` lines with `[section]` headers.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads for episode evaluation (results do not depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Override a configuration key, e.g. `--set train.lr=0.01`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a stochastic block model graph as a bundle directory.
    Generate(GenerateArgs),
    /// Pretrain an encoder with validation early stopping and save it.
    Pretrain(PretrainArgs),
    /// Run the evaluation protocol and print RunResult JSON.
    Evaluate(EvaluateArgs),
    /// Evaluate the joint loss across mixture weights.
    SweepLambda(SweepArgs),
    /// Run the protocol and score K-means on novel-class embeddings.
    ClusterEval(EvaluateArgs),
    /// Embed every node with a saved encoder.
    ExportEmbeddings(ExportArgs),
    /// Finite-difference check of every analytic gradient.
    Gradcheck(GradcheckArgs),
}

#[derive(Debug, Args)]
pub struct EpisodeArgs {
    /// Dataset name under the data directory, or a bundle directory.
    #[arg(long)]
    pub dataset: String,
    /// Ways per episode.
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    /// Shots per class.
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<usize>,
    /// Queries per class.
    #[arg(long)]
    pub m: Option<usize>,
    /// Repetitions.
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Episodes per validation or test pass.
    #[arg(long)]
    pub tasks: Option<usize>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, default_value_t = 6)]
    pub classes: usize,
    #[arg(long, default_value_t = 100)]
    pub nodes_per_class: usize,
    #[arg(long, default_value_t = 0.2)]
    pub p_in: f64,
    #[arg(long, default_value_t = 0.01)]
    pub p_out: f64,
    #[arg(long, default_value_t = 16)]
    pub feature_dim: usize,
    /// Distance of each class mean from the origin, in noise units.
    #[arg(long, default_value_t = 3.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 1.0)]
    pub noise: f64,
    /// Train, dev and test class counts.
    #[arg(long, value_delimiter = ',', default_value = "2,2,2")]
    pub split: Vec<usize>,
    /// Feature file format: csv or binary.
    #[arg(long, default_value = "csv")]
    pub format: String,
}

#[derive(Debug, Args)]
pub struct PretrainArgs {
    #[command(flatten)]
    pub episodes: EpisodeArgs,
    /// ignn or one of the tlp-* methods.
    #[arg(long)]
    pub method: String,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub episodes: EpisodeArgs,
    /// One or more comma-separated method names.
    #[arg(long, value_delimiter = ',', required = true)]
    pub method: Vec<String>,
    /// Also report NMI and ARI of K-means on novel-class embeddings.
    #[arg(long)]
    pub cluster: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub episodes: EpisodeArgs,
    /// Mixture weights; defaults to 0.0, 0.1, ..., 1.0.
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    /// Dataset name under the data directory, or a bundle directory.
    #[arg(long)]
    pub dataset: String,
    /// Encoder checkpoint written by `pretrain`.
    #[arg(long)]
    pub checkpoint: PathBuf,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Random instances per check.
    #[arg(long, default_value_t = 100)]
    pub draws: usize,
}

/// Parse `args` (program name first), execute, and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .try_init();
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let mut overrides = cli.overrides.clone();
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads.unwrap_or(0))
        .build()
        .map_err(|e| CliError::Failed(format!("cannot start worker pool: {e}")))?;
    pool.install(|| commands::dispatch(cli, &overrides))
}
