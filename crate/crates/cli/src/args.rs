use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{GeneratorKind, ModelChoice, ModelRef};

#[derive(Debug, Parser)]
#[command(
    name = "jumpcal",
    version,
    about = "Neural jump-diffusion option pricing: data, training, evaluation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run config (JSON), or a manifest from an earlier run.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed for every random draw; overrides the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Price the synthetic training and testing grids.
    Generate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        model: Option<GeneratorKind>,
        /// Monte-Carlo paths for the SVCJ generator.
        #[arg(long)]
        paths: Option<usize>,
    },
    /// Fit one model to a quote file.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        model: Option<ModelChoice>,
        /// Training quotes (CSV).
        #[arg(long)]
        data: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        /// Simulated paths per contract (neural models).
        #[arg(long)]
        paths: Option<usize>,
        /// Time steps per path (neural models).
        #[arg(long)]
        steps: Option<usize>,
        /// Continue a neural run from its checkpoint.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Stop a neural run after this many epochs in total.
        #[arg(long)]
        stop_after: Option<usize>,
    },
    /// Price quote files with trained models and score them.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Trained model as LABEL=PATH; repeatable.
        #[arg(long = "model")]
        models: Vec<ModelRef>,
        #[arg(long)]
        train_data: Option<PathBuf>,
        #[arg(long)]
        test_data: Option<PathBuf>,
    },
    /// Pairwise Diebold-Mariano tests on out-of-sample errors.
    Compare {
        #[command(flatten)]
        common: Common,
        /// Out-of-sample report as LABEL=PATH; repeatable.
        #[arg(long = "model")]
        reports: Vec<ModelRef>,
    },
}
