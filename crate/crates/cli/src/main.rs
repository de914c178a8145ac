//! `odimdp`: reproducible pipelines over ball-by-ball one-day cricket data.
//!
//! Subcommands mirror the modeling pipeline: `ingest` raw data into a
//! canonical corpus, `train` a resources-left value network, `evaluate` it
//! against the DLS table under 10-fold cross-validation, `predict` from one
//! state, `irl` a linear reward from winning-team play, `policy` the optimal
//! actions by dynamic programming, and `simulate` posterior score
//! distributions.
//!
//! Every flag can also come from a JSON config file (`--config`), with flags
//! taking precedence. Commands that use randomness require an explicit seed;
//! nothing falls back to wall-clock state.

mod commands;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "odimdp",
    version,
    about = "Markov modeling of one-day cricket innings"
)]
struct Cli {
    /// JSON config file with per-command sections mirroring the flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Cap the worker thread count (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest raw match files into a canonical corpus directory.
    Ingest(IngestArgs),
    /// Train a value network on Monte-Carlo targets from a corpus.
    Train(TrainArgs),
    /// Cross-validate the value network against the DLS baseline.
    Evaluate(EvaluateArgs),
    /// Resources left and projected final score for one state.
    Predict(PredictArgs),
    /// Recover linear reward coefficients from winning-team play.
    Irl(IrlArgs),
    /// Estimate transitions and compute the optimal batting policy.
    Policy(PolicyArgs),
    /// Simulate posterior final-score distributions from a state.
    Simulate(SimulateArgs),
}

/// Per-command sections of the JSON config file.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(default)]
    ingest: Option<IngestArgs>,
    #[serde(default)]
    train: Option<TrainArgs>,
    #[serde(default)]
    evaluate: Option<EvaluateArgs>,
    #[serde(default)]
    predict: Option<PredictArgs>,
    #[serde(default)]
    irl: Option<IrlArgs>,
    #[serde(default)]
    policy: Option<PolicyArgs>,
    #[serde(default)]
    simulate: Option<SimulateArgs>,
}

#[derive(Args, Deserialize, Default, Clone)]
#[serde(deny_unknown_fields)]
pub struct IngestArgs {
    /// Directory of raw match files.
    #[arg(long)]
    pub(crate) input: Option<PathBuf>,
    /// Corpus directory to create (must not exist).
    #[arg(long)]
    pub(crate) out: Option<PathBuf>,
    /// Input format: `cricsheet` or `canonical`.
    #[arg(long)]
    pub(crate) from: Option<String>,
    /// Drop matches whose result was decided by the DLS method.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(default)]
    pub(crate) exclude_dls_decided: Option<bool>,
}

#[derive(Args, Deserialize, Default, Clone)]
#[serde(deny_unknown_fields)]
pub struct TrainArgs {
    #[arg(long)]
    pub(crate) corpus: Option<PathBuf>,
    /// Innings to model: 1 or 2.
    #[arg(long)]
    pub(crate) innings: Option<u8>,
    /// Hidden layer widths, comma separated (e.g. `64,32`).
    #[arg(long)]
    pub(crate) hidden: Option<String>,
    #[arg(long)]
    pub(crate) epochs: Option<usize>,
    #[arg(long)]
    pub(crate) learning_rate: Option<f64>,
    #[arg(long)]
    pub(crate) batch_size: Option<usize>,
    #[arg(long)]
    pub(crate) seed: Option<u64>,
    /// Model artifact path.
    #[arg(long)]
    pub(crate) out: Option<PathBuf>,
    /// Optional training-report artifact path.
    #[arg(long)]
    pub(crate) report: Option<PathBuf>,
}

#[derive(Args, Deserialize, Default, Clone)]
#[serde(deny_unknown_fields)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub(crate) corpus: Option<PathBuf>,
    #[arg(long)]
    pub(crate) innings: Option<u8>,
    /// DLS resource table CSV.
    #[arg(long)]
    pub(crate) dls: Option<PathBuf>,
    #[arg(long)]
    pub(crate) hidden: Option<String>,
    #[arg(long)]
    pub(crate) epochs: Option<usize>,
    #[arg(long)]
    pub(crate) learning_rate: Option<f64>,
    #[arg(long)]
    pub(crate) batch_size: Option<usize>,
    #[arg(long)]
    pub(crate) seed: Option<u64>,
    /// Fold-report artifact path.
    #[arg(long)]
    pub(crate) out: Option<PathBuf>,
    /// Optional CSV export path.
    #[arg(long)]
    pub(crate) csv: Option<PathBuf>,
}

#[derive(Args, Deserialize, Default, Clone)]
#[serde(deny_unknown_fields)]
pub struct PredictArgs {
    /// Model artifact from `train`.
    #[arg(long)]
    pub(crate) model: Option<PathBuf>,
    #[arg(long)]
    pub(crate) innings: Option<u8>,
    /// Completed overs at the interruption.
    #[arg(long)]
    pub(crate) over: Option<u8>,
    #[arg(long)]
    pub(crate) wickets: Option<u8>,
    /// Current score.
    #[arg(long)]
    pub(crate) score: Option<u32>,
    /// Legal-ball index within the over (0..=5).
    #[arg(long)]
    pub(crate) ball: Option<u8>,
    /// Extra flag: the previous delivery at this ball was an extra.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub(crate) extra: Option<bool>,
    /// Chase target (second innings only).
    #[arg(long)]
    pub(crate) target: Option<u32>,
}

#[derive(Args, Deserialize, Default, Clone)]
#[serde(deny_unknown_fields)]
pub struct IrlArgs {
    #[arg(long)]
    pub(crate) corpus: Option<PathBuf>,
    /// Coefficients artifact path.
    #[arg(long)]
    pub(crate) out: Option<PathBuf>,
}

#[derive(Args, Deserialize, Default, Clone)]
#[serde(deny_unknown_fields)]
pub struct PolicyArgs {
    #[arg(long)]
    pub(crate) corpus: Option<PathBuf>,
    /// Coefficients artifact from `irl`.
    #[arg(long)]
    pub(crate) coeffs: Option<PathBuf>,
    /// First-innings transition model artifact path (rates attached).
    #[arg(long)]
    pub(crate) out_transitions: Option<PathBuf>,
    /// Policy/Q artifact path.
    #[arg(long)]
    pub(crate) out_policy: Option<PathBuf>,
    /// Optional second-innings transition model artifact path.
    #[arg(long)]
    pub(crate) out_transitions2: Option<PathBuf>,
}

#[derive(Args, Deserialize, Default, Clone)]
#[serde(deny_unknown_fields)]
pub struct SimulateArgs {
    /// Transition model artifact (innings must match `--innings`).
    #[arg(long)]
    pub(crate) transitions: Option<PathBuf>,
    #[arg(long)]
    pub(crate) innings: Option<u8>,
    /// `behavioral` or `optimal`.
    #[arg(long)]
    pub(crate) mode: Option<String>,
    /// Policy artifact (required for optimal mode).
    #[arg(long)]
    policy: Option<PathBuf>,
    #[arg(long)]
    pub(crate) over: Option<u8>,
    #[arg(long)]
    pub(crate) wickets: Option<u8>,
    #[arg(long)]
    pub(crate) score: Option<u32>,
    #[arg(long)]
    pub(crate) ball: Option<u8>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub(crate) extra: Option<bool>,
    /// Chase target (second innings only).
    #[arg(long)]
    pub(crate) target: Option<u32>,
    #[arg(long)]
    pub(crate) n_sims: Option<usize>,
    #[arg(long)]
    pub(crate) seed: Option<u64>,
    /// Distribution artifact path.
    #[arg(long)]
    pub(crate) out: Option<PathBuf>,
    /// Optional histogram CSV path.
    #[arg(long)]
    pub(crate) csv: Option<PathBuf>,
    /// Optional JSON-lines trajectory dump.
    #[arg(long)]
    pub(crate) dump_trajectories: Option<PathBuf>,
}

pub(crate) fn merge<T: Clone>(cli: Option<T>, file: Option<T>) -> Option<T> {
    cli.or(file)
}

pub(crate) fn require<T>(value: Option<T>, flag: &str) -> Result<T> {
    value.ok_or_else(|| anyhow::anyhow!("missing required option --{flag} (flag or config file)"))
}

fn load_file_config(path: Option<&PathBuf>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(path) => {
            let bytes = std::fs::read(path)
                .with_context(|| format!("reading config file {}", path.display()))?;
            serde_json::from_slice(&bytes)
                .with_context(|| format!("parsing config file {}", path.display()))
        }
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let file = load_file_config(cli.config.as_ref())?;

    #[cfg(feature = "parallel")]
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the worker pool")?;
    }
    #[cfg(not(feature = "parallel"))]
    if cli.threads.is_some() {
        eprintln!("warning: --threads has no effect in a sequential build");
    }

    match cli.command {
        Command::Ingest(args) => commands::ingest(args, file.ingest),
        Command::Train(args) => commands::train(args, file.train),
        Command::Evaluate(args) => commands::evaluate(args, file.evaluate),
        Command::Predict(args) => commands::predict(args, file.predict),
        Command::Irl(args) => commands::irl(args, file.irl),
        Command::Policy(args) => commands::policy(args, file.policy),
        Command::Simulate(args) => commands::simulate(args, file.simulate),
    }
}
