use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(
    name = "mbe",
    version,
    about = "Model-based counterfactual evaluation of a newly introduced treatment"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default)]
pub struct GlobalArgs {
    /// JSON file supplying any flag; flags given on the command line win.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Seed for every stochastic step. Required by stochastic commands.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory, created if missing (default: current directory).
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads for bootstrap and simulation replicates.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// Effect scale; repeat for several (default: rd).
    #[arg(long = "scale", global = true, value_enum)]
    pub scales: Vec<ScaleArg>,
    /// Bootstrap mode (estimate default: full; simulate default: none).
    #[arg(long, global = true, value_enum)]
    pub bootstrap: Option<BootstrapArg>,
    /// Bootstrap replicates for estimate/diagnose/sensitivity, Monte Carlo
    /// replicates for simulate.
    #[arg(long, global = true, value_name = "N")]
    pub replicates: Option<usize>,
    /// Suppress progress messages on stderr.
    #[arg(short, long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleArg {
    Rd,
    Rr,
    Or,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BootstrapArg {
    Fixed,
    Full,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalArg {
    Percentile,
    Normal,
}

#[derive(Debug, Args, Default)]
pub struct CohortArgs {
    /// Pre-introduction cohort CSV.
    #[arg(long, value_name = "CSV")]
    pub pre: Option<PathBuf>,
    /// Post-introduction cohort CSV.
    #[arg(long, value_name = "CSV")]
    pub post: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
pub struct ModelArgs {
    /// Model preset (default, quadratic, interactions, intercept) or a
    /// comma-separated list of term names.
    #[arg(long)]
    pub spec: Option<String>,
    /// Use a previously fitted model (JSON from `fit`) instead of refitting.
    #[arg(long, value_name = "JSON")]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic pre/post cohorts with known effects.
    Generate {
        #[arg(long)]
        n_pre: Option<usize>,
        #[arg(long)]
        n_post: Option<usize>,
        /// Selection benefit threshold.
        #[arg(long)]
        threshold: Option<f64>,
        /// Apply the shift of a violation scenario.
        #[arg(long)]
        scenario: Option<String>,
    },
    /// Fit the outcome model on the pre-introduction cohort.
    Fit {
        #[arg(long, value_name = "CSV")]
        pre: Option<PathBuf>,
        #[arg(long)]
        spec: Option<String>,
    },
    /// Estimate the ATT with bootstrap intervals and diagnostics.
    Estimate {
        #[command(flatten)]
        cohorts: CohortArgs,
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_enum)]
        interval: Option<IntervalArg>,
    },
    /// Overlap, negative-control and dose-transport checks.
    Diagnose {
        #[command(flatten)]
        cohorts: CohortArgs,
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Re-estimate the ATT under several model specifications.
    Sensitivity {
        #[command(flatten)]
        cohorts: CohortArgs,
        /// Model variants (presets or `a+b+c` term lists), comma-separated.
        #[arg(long, value_delimiter = ',')]
        variants: Vec<String>,
    },
    /// Monte Carlo bias study under condition violations.
    Simulate {
        /// Scenario name, repeatable, or `all`.
        #[arg(long = "scenario")]
        scenarios: Vec<String>,
        /// Bootstrap replicates per world when `--bootstrap` is set.
        #[arg(long)]
        bootstrap_replicates: Option<usize>,
        #[arg(long)]
        n_pre: Option<usize>,
        #[arg(long)]
        n_post: Option<usize>,
    },
}
