//! Command line surface of the `dreamplan` binary.

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "dreamplan",
    version,
    about = "Benchmark driver for planning over randomized instance sets"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one episode and print its outcome.
    Run(RunArgs),
    /// Sweep one perturbation axis for both methods and write a CSV.
    Sweep(SweepArgs),
    /// Rerun a fixed perturbation protocol across one planner knob.
    Ablate(AblateArgs),
    /// Measure per-step planning time across planner sizes.
    Profile(ProfileArgs),
}

/// Flags shared by every subcommand.
#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Run config file.
    #[arg(long)]
    pub config: PathBuf,

    /// Master seed. Overrides the DREAMPLAN_SEED environment variable,
    /// which in turn overrides the seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Worker threads for episode batches. Results are identical for any
    /// value.
    #[arg(long)]
    pub jobs: Option<usize>,

    /// Rewrite the config to the comparison method: one candidate, no cage.
    #[arg(long)]
    pub baseline: bool,

    /// Log scored candidate batches into the episode record.
    #[arg(long)]
    pub log_candidates: bool,

    /// Output file. Defaults to stdout for tabular output; `run` writes an
    /// episode record only when this is set.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Which knob to ablate.
    #[arg(long, value_enum)]
    pub which: AblateWhich,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AblateWhich {
    /// Instance count of the sampled sets.
    M,
    /// Candidate actions per step.
    N,
    /// Randomization width preset.
    Width,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}
