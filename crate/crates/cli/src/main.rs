//! `stlcf` command-line driver.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 runtime or model error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stlcf::data::Orientation;
use stlcf::eval::Method;

#[derive(Parser, Debug)]
#[command(name = "stlcf", version, about = "Selective transfer learning for cross-domain collaborative filtering")]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic cross-domain collection.
    Synth(SynthArgs),
    /// Split a ratings file into train and test parts.
    Split(SplitArgs),
    /// Fit a model or boosted ensemble.
    Train(TrainArgs),
    /// Predict ratings for `user,item` pairs with a saved model.
    Predict(PredictArgs),
    /// Run an experiment spec and write its report.
    Experiment(ExperimentArgs),
}

/// Hyperparameter overrides shared by `train` and `experiment`.
#[derive(Args, Debug, Default, Clone)]
pub struct ModelFlags {
    /// Latent topic count.
    #[arg(long)]
    pub k: Option<usize>,
    /// Total source-domain share of the likelihood.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Per-rating error tolerance of the item indicator.
    #[arg(long)]
    pub tau: Option<f64>,
    /// Weight of the error-variance term.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Boosting rounds.
    #[arg(short = 'T', long = "rounds")]
    pub rounds: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SplitArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub fraction: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub rating_min: Option<f64>,
    #[arg(long)]
    pub rating_max: Option<f64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub target: Option<PathBuf>,
    /// Source-domain ratings file; repeat for several sources.
    #[arg(long = "source")]
    pub sources: Vec<PathBuf>,
    #[arg(long, value_parser = parse_method)]
    pub method: Option<Method>,
    #[arg(long, value_parser = parse_orientation)]
    pub orientation: Option<Orientation>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub rating_min: Option<f64>,
    #[arg(long)]
    pub rating_max: Option<f64>,
    #[command(flatten)]
    pub model: ModelFlags,
    /// Model file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// File of `user,item` lines.
    #[arg(long)]
    pub pairs: Option<PathBuf>,
    /// Predictions file to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    /// Experiment spec (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Run a single seed instead of the spec's list.
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub model: ModelFlags,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: stlcf::Error| e.to_string())
}

fn parse_orientation(s: &str) -> Result<Orientation, String> {
    match s {
        "shared-users" => Ok(Orientation::SharedUsers),
        "shared-items" => Ok(Orientation::SharedItems),
        _ => Err(format!("expected shared-users or shared-items, got {s:?}")),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("STLCF_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: could not configure {n} threads: {e}");
            return ExitCode::from(1);
        }
    }
    let outcome = match cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Split(a) => commands::split(a),
        Command::Train(a) => commands::train(a),
        Command::Predict(a) => commands::predict(a),
        Command::Experiment(a) => commands::experiment(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
