use std::path::PathBuf;

use citeverify_core::labeler::{DEFAULT_EXIST_THRESHOLD, DEFAULT_UNRESOLVED_THRESHOLD};
use citeverify_core::stats::{DEFAULT_RESAMPLES, DEFAULT_SEED};
use citeverify_core::{Condition, Resampling};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "citeverify", version, about = "Verify model-generated citations against Crossref and Semantic Scholar")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write one prompt file per (claim, condition).
    RenderPrompts(RenderArgs),
    /// Parse model outputs, retrieve candidates, and label every citation.
    Verify(VerifyArgs),
    /// Cell metrics with bootstrap CIs, per-claim fractions, and difference table.
    Stats(StatsArgs),
    /// Agreement and Cohen's kappa of pipeline labels against a human audit.
    Validate(ValidateArgs),
    /// Data behind the stacked-proportion and per-claim box plots.
    PlotData(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Backend {
    Live,
    Fixture,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long)]
    pub claims: PathBuf,
    /// Directory with `<condition>.txt` template overrides.
    #[arg(long)]
    pub templates: Option<PathBuf>,
    /// Comma-separated subset of conditions; all five by default.
    #[arg(long, value_delimiter = ',')]
    pub conditions: Vec<Condition>,
    #[arg(long, default_value = "report")]
    pub report_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub claims: PathBuf,
    #[arg(long)]
    pub outputs: PathBuf,
    #[arg(long, value_enum, default_value_t = Backend::Live)]
    pub backend: Backend,
    /// Directory holding `index.jsonl`; required with `--backend fixture`.
    #[arg(long)]
    pub fixture_dir: Option<PathBuf>,
    #[arg(long, env = "CITEVERIFY_CACHE")]
    pub cache_dir: Option<PathBuf>,
    #[arg(long, env = "CROSSREF_MAILTO")]
    pub mailto: Option<String>,
    #[arg(long, env = "S2_API_KEY", hide_env_values = true)]
    pub s2_api_key: Option<String>,
    #[arg(long, default_value = "report")]
    pub report_dir: PathBuf,
    /// Candidates kept per title search.
    #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u16).range(1..))]
    pub k: u16,
    #[arg(long, default_value_t = 5.0)]
    pub crossref_rate: f64,
    #[arg(long, default_value_t = 1.0)]
    pub s2_rate: f64,
    #[arg(long, default_value_t = DEFAULT_EXIST_THRESHOLD)]
    pub exist_threshold: f64,
    #[arg(long, default_value_t = DEFAULT_UNRESOLVED_THRESHOLD)]
    pub unresolved_threshold: f64,
    /// Largest tolerated share of citations whose every lookup failed.
    #[arg(long, default_value_t = 0.10)]
    pub failure_budget: f64,
}

#[derive(Debug, Args)]
pub struct BootstrapArgs {
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_RESAMPLES, value_parser = parse_resamples)]
    pub bootstrap_n: usize,
}

fn parse_resamples(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be at least 1".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub verdicts: PathBuf,
    /// Per-run citation counts; defaults to `runs.jsonl` beside the verdicts.
    #[arg(long)]
    pub runs: Option<PathBuf>,
    /// Claims file, enabling the per-domain breakdown.
    #[arg(long)]
    pub claims: Option<PathBuf>,
    /// Human audit labels, enabling the sensitivity reassignment.
    #[arg(long)]
    pub audit: Option<PathBuf>,
    #[command(flatten)]
    pub bootstrap: BootstrapArgs,
    #[arg(long, default_value_t = Resampling::Paired, value_parser = clap::value_parser!(Resampling))]
    pub resampling: Resampling,
    /// Models pooled as the first group of the group contrast.
    #[arg(long, value_delimiter = ',')]
    pub proprietary: Vec<String>,
    /// Models pooled as the second group of the group contrast.
    #[arg(long, value_delimiter = ',')]
    pub open_weight: Vec<String>,
    /// Extra contrast `MODEL/CONDITION:MODEL/CONDITION`; positive delta favors the first.
    #[arg(long)]
    pub contrast: Vec<String>,
    /// Skip the per-model "condition minus Baseline" contrasts.
    #[arg(long)]
    pub no_baseline_contrasts: bool,
    #[arg(long, default_value = "report")]
    pub report_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long)]
    pub verdicts: PathBuf,
    #[arg(long)]
    pub audit: PathBuf,
    /// Also write `validation.json` here.
    #[arg(long)]
    pub report_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub verdicts: PathBuf,
    #[arg(long)]
    pub runs: Option<PathBuf>,
    /// Claims file, enabling the per-domain rates.
    #[arg(long)]
    pub claims: Option<PathBuf>,
    #[arg(long, default_value = "report")]
    pub report_dir: PathBuf,
}
