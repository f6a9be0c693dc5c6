use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "carbonsched", version, about = "Carbon-intensity-aware DNN model selection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Replay carbon and request traces under the heuristic and fixed baselines.
    Simulate(SimulateArgs),
    /// Run the live selection service.
    Serve(ServeArgs),
    /// Compute carbon emission efficiency from error rates and carbon totals.
    Cee(CeeArgs),
    /// Check an input file and print a short summary.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

#[derive(Debug, Args, Default)]
pub struct SimulateArgs {
    /// TOML file with defaults for any of the flags below (same key names,
    /// dashes replaced by underscores).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Carbon-intensity CSV (or feed-shaped .json/.jsonl).
    #[arg(long)]
    pub carbon: Option<PathBuf>,
    /// Request-count CSV.
    #[arg(long)]
    pub requests: Option<PathBuf>,
    /// Model pool CSV.
    #[arg(long, conflicts_with = "pool_builtin")]
    pub pool: Option<PathBuf>,
    /// Bundled pool: `full` or `resnet` (default).
    #[arg(long)]
    pub pool_builtin: Option<String>,
    /// `prose` (default) or `literal`.
    #[arg(long)]
    pub mapping: Option<String>,
    /// `whole` (default) or a trailing window length in hours.
    #[arg(long)]
    pub window: Option<String>,
    /// Policy used as the CEE baseline (default ResNet50).
    #[arg(long)]
    pub baseline: Option<String>,
    /// Fixed-model baselines to run (repeatable); defaults to the ResNets.
    #[arg(long = "fixed")]
    pub fixed: Vec<String>,
    /// Coverage-gap handling: `strict` (default) or `carry-forward`.
    #[arg(long)]
    pub gap: Option<String>,
    /// Report path (default report.json / report.csv).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<ReportFormat>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// TOML service configuration; CARBONSCHED_* variables override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CeeArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub baseline_error: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub candidate_error: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub baseline_carbon: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub candidate_carbon: f64,
    /// Print the comparison as JSON at full precision.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct ValidateArgs {
    #[arg(long)]
    pub carbon: Option<PathBuf>,
    #[arg(long)]
    pub requests: Option<PathBuf>,
    #[arg(long)]
    pub pool: Option<PathBuf>,
    /// Dump a bundled pool (`full` or `resnet`).
    #[arg(long)]
    pub pool_builtin: Option<String>,
}
