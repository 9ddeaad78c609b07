use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::Mode;

#[derive(Debug, Parser)]
#[command(name = "edgereg", version, about = "Bayesian edge regression for covariate-dependent graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate synthetic replicate datasets with their ground truth.
    Simulate(SimulateArgs),
    /// Run the sampler and archive posterior draws.
    Fit(FitArgs),
    /// Select graphs from an archive for each (level, kappa, alpha).
    Select(SelectArgs),
    /// Score archives against simulated ground truth.
    Evaluate(EvaluateArgs),
    /// Geweke and ESS report over sampled parameters.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML run configuration; flags take precedence over it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads for replicate batches (also `EDGEREG_WORKERS`).
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub sim: Option<u8>,
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub n_reference: Option<usize>,
    #[arg(long)]
    pub n_mixed: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Dataset directory, or a directory of `rep_*` dataset directories.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Comma-separated levels: purities, group names or `a:b:c` vectors.
    #[arg(long)]
    pub levels: Option<String>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub burn_in: Option<usize>,
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long)]
    pub intercept: bool,
    #[arg(long)]
    pub store_subject_level: bool,
    #[arg(long)]
    pub no_adapt: bool,
    /// Overwrite an archive built from a different configuration.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SelectArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long)]
    pub archive: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated kappa values.
    #[arg(long)]
    pub kappa: Option<String>,
    /// Comma-separated alpha values.
    #[arg(long)]
    pub alpha: Option<String>,
    /// Levels to report; defaults to every target level in the archive.
    #[arg(long)]
    pub levels: Option<String>,
    /// CSV with `node,pathway` columns for within/between edge counts.
    #[arg(long)]
    pub pathways: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Archive, or a directory of `rep_*` archives.
    #[arg(long)]
    pub archive: PathBuf,
    /// Dataset directory with truth files, or a directory of `rep_*` ones.
    #[arg(long)]
    pub truth: PathBuf,
    /// Output directory for `report.csv` and `roc.csv`.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "edge_regression")]
    pub method: String,
}

#[derive(Debug, Clone, Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub archive: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Comma-separated parameter prefixes, e.g. `lambda,gamma`.
    #[arg(long)]
    pub params: Option<String>,
}
