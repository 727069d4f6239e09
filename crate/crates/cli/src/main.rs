mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};
use serde::Serialize;

use displace_core::classifier::PromptMode;
use displace_core::displacement::Variant;
use displace_core::distfit::Support;

#[derive(Debug, Parser, Serialize)]
#[command(name = "displace", about = "Displacement-index analytics over citation graphs")]
pub struct Cli {
    /// Worker threads for parallel stages (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Build a binary snapshot from papers.jsonl and edges.tsv.
    Ingest(IngestArgs),
    /// Per-paper D-variants and decomposition as JSONL.
    Metrics(MetricsArgs),
    /// Zipf-Mandelbrot fits of reference citation curves.
    Zipf(ZipfArgs),
    /// Pools of high-D papers sharing a top reference.
    Multiples(MultiplesArgs),
    /// Power law vs truncated Poisson on a size histogram.
    Distfit(DistfitArgs),
    /// Field overlap between high-D papers and their top reference.
    Overlap(OverlapArgs),
    /// Theory/method labelling through a chat-completions endpoint.
    Classify(ClassifyArgs),
    /// Sign fractions and histograms from a metrics run.
    Report(ReportArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    #[arg(long)]
    pub papers: PathBuf,
    #[arg(long)]
    pub edges: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Keep books, conference papers and other document types.
    #[arg(long)]
    pub all_doc_types: bool,
    #[arg(long, default_value_t = 0)]
    pub min_references: u32,
    #[arg(long, default_value_t = 0)]
    pub min_citations: u32,
    #[arg(long, requires = "year_to")]
    pub year_from: Option<i32>,
    #[arg(long, requires = "year_from")]
    pub year_to: Option<i32>,
    /// Fail on edges naming unknown papers instead of skipping them.
    #[arg(long)]
    pub strict_edges: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct MetricsArgs {
    #[arg(long)]
    pub snapshot: PathBuf,
    /// d0, d1, d2, d3, d4 or all.
    #[arg(long, default_value = "all")]
    pub variant: String,
    #[arg(long, default_value_t = 24, conflicts_with = "popular_quartile")]
    pub popular_threshold: u32,
    #[arg(long)]
    pub popular_quartile: bool,
    #[arg(long)]
    pub no_time_filter: bool,
    /// Count only citations of the top reference from the focal year onwards.
    #[arg(long)]
    pub windowed_c_max: bool,
    #[arg(long, default_value_t = 1)]
    pub min_citations: u32,
    #[arg(long, default_value_t = 1)]
    pub min_references: u32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ZipfArgs {
    #[arg(long)]
    pub snapshot: PathBuf,
    #[arg(long, default_value_t = 1000)]
    pub sample: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 3)]
    pub min_refs: usize,
    /// Drop references without citations before ranking.
    #[arg(long)]
    pub drop_zeros: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Population means as JSON.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct MultiplesArgs {
    #[arg(long)]
    pub snapshot: PathBuf,
    /// Reports from `metrics`; computed with default settings when absent.
    #[arg(long)]
    pub reports: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    pub min_citations: u64,
    #[arg(long, default_value_t = 0.2)]
    pub min_d: f64,
    #[arg(long, default_value = "d0")]
    pub variant: Variant,
    #[arg(long, default_value_t = 2)]
    pub min_pool_size: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// size,count rows.
    #[arg(long)]
    pub histogram: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct DistfitArgs {
    /// value,count rows.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub truncation: u64,
    #[arg(long, default_value_t = 0.05)]
    pub significance: f64,
    /// observed or ks-xmin.
    #[arg(long, default_value = "observed", value_parser = parse_support)]
    pub support: Support,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_support(s: &str) -> Result<Support, String> {
    match s {
        "observed" => Ok(Support::Observed),
        "ks-xmin" | "ks_xmin" => Ok(Support::KsXmin),
        _ => Err(format!("unknown support `{s}` (expected observed or ks-xmin)")),
    }
}

#[derive(Debug, Args, Serialize)]
pub struct OverlapArgs {
    #[arg(long)]
    pub snapshot: PathBuf,
    #[arg(long)]
    pub reports: Option<PathBuf>,
    #[arg(long, default_value_t = 0.21)]
    pub d_cutoff: f64,
    #[arg(long, default_value_t = 292)]
    pub fields: u32,
    #[arg(long, default_value_t = 2)]
    pub labels_per_paper: u32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ClassifyArgs {
    /// Full chat-completions URL.
    #[arg(long)]
    pub endpoint: String,
    #[arg(long)]
    pub model: String,
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long, default_value = "zero_shot")]
    pub mode: PromptMode,
    #[arg(long, default_value_t = 8)]
    pub max_in_flight: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Progress journal; defaults to `<out>.journal`.
    #[arg(long)]
    pub journal: Option<PathBuf>,
    /// Discard an existing journal instead of resuming it.
    #[arg(long)]
    pub restart: bool,
    #[arg(long, default_value_t = 60)]
    pub timeout_secs: u64,
    #[arg(long, default_value_t = 4)]
    pub max_attempts: u32,
}

#[derive(Debug, Args, Serialize)]
pub struct ReportArgs {
    #[arg(long)]
    pub reports: PathBuf,
    /// Receives summary.json and the histogram CSVs.
    #[arg(long)]
    pub out_dir: PathBuf,
}

fn version() -> String {
    format!(
        "{} (snapshot format {})",
        env!("CARGO_PKG_VERSION"),
        displace_core::SNAPSHOT_FORMAT_VERSION
    )
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let matches = Cli::command().version(version()).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    match commands::run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
