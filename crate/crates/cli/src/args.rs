use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use sreds_core::Metric;

#[derive(Debug, Parser)]
#[command(name = "sreds", version, about = "Skin-tone metrics over face image datasets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute one metric for every image in a manifest.
    Compute(ComputeArgs),
    /// Normalize metric files and summarize intra-subject variability.
    Eval(EvalArgs),
    /// Render a synthetic illumination-sweep dataset.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct ComputeArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// ita, rsr, rsr-star or sreds.
    #[arg(long)]
    pub metric: Metric,
    /// JSON run configuration; defaults apply to absent fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Project with a previously saved fit.
    #[arg(long, conflicts_with = "fit_out")]
    pub fit: Option<PathBuf>,
    /// Fit on this manifest and save the fit here.
    #[arg(long)]
    pub fit_out: Option<PathBuf>,
    /// Metrics CSV to write.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u16).range(1..))]
    pub jobs: u16,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Accept a fit produced under a different config.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Metrics CSVs produced by `compute`.
    #[arg(required = true)]
    pub metrics: Vec<PathBuf>,
    #[arg(long)]
    pub manifest: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Also write SVG histograms.
    #[arg(long)]
    pub plots: bool,
    /// Merge metric files produced under different configs.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub subjects: usize,
    /// Incidence angles per subject, spread over [-45°, 45°].
    #[arg(long, default_value_t = 7)]
    pub images_per_subject: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}
