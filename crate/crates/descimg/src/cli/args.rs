use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use descimg_core::{MetricId, SchemaMode, Split};

use crate::fetch::QueryMode;
use crate::report::ReportFormat;
use crate::scorer::Granularity;

#[derive(Debug, Parser)]
#[command(
    name = "descimg",
    version,
    about = "Classify web sites from their descriptive images and evaluate the fusion metrics",
    args_override_self = true
)]
pub struct Cli {
    /// TOML file supplying flag values. Top-level keys apply to every
    /// subcommand that has the flag, `[<subcommand>]` tables to one
    /// subcommand. Flags given on the command line win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Stderr log level: error, warn, info, debug or trace.
    #[arg(long, global = true, value_name = "LEVEL", default_value = "warn")]
    pub log_level: tracing::Level,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Download descriptive images for every manifest record.
    Fetch(FetchArgs),
    /// Produce score documents for fetched image sets.
    Score(ScoreArgs),
    /// Show the fused scores and decision of one site.
    Classify(ClassifyArgs),
    /// Evaluate all thirteen metrics on the test split.
    Evaluate(EvaluateArgs),
    /// Evaluate every epoch_NNN snapshot under a directory.
    Sweep(SweepArgs),
    /// Image-set statistics: ratio histogram, large-image count, counts per split.
    Stats(StatsArgs),
    /// Re-render a saved JSON report or series.
    Report(ReportArgs),
    /// Generate a planted synthetic dataset with stub scores.
    Synth(SynthArgs),
}

fn parse_metric(s: &str) -> Result<MetricId, String> {
    s.parse().map_err(|e: descimg_core::CoreError| e.to_string())
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    s.parse()
        .map_err(|_| format!("expected one of {}", ReportFormat::NAMES.join(", ")))
}

fn parse_split(s: &str) -> Result<Split, String> {
    s.parse().map_err(|e: descimg_core::CoreError| e.to_string())
}

fn parse_mode(s: &str) -> Result<SchemaMode, String> {
    s.parse()
}

fn parse_query_mode(s: &str) -> Result<QueryMode, String> {
    s.parse().map_err(|e: crate::Error| e.to_string())
}

fn parse_rate(s: &str) -> Result<f64, String> {
    let p: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if (0.0..=1.0).contains(&p) {
        Ok(p)
    } else {
        Err(format!("{p} is outside [0,1]"))
    }
}

fn parse_class_rate(s: &str) -> Result<(String, f64), String> {
    let (name, p) = s
        .split_once('=')
        .ok_or_else(|| "expected LABEL=RATE".to_string())?;
    Ok((name.to_string(), parse_rate(p)?))
}

#[derive(Debug, Args)]
pub struct FetchArgs {
    /// Dataset manifest (CSV or JSON).
    #[arg(long, value_name = "FILE")]
    pub manifest: PathBuf,
    /// Image root; sites land in <out>/<site_id>/NN.jpg.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// HTTP JSON provider description (TOML).
    #[arg(long, value_name = "FILE", conflicts_with = "mock_seed", required_unless_present = "mock_seed")]
    pub provider: Option<PathBuf>,
    /// Use the built-in deterministic mock provider with this seed.
    #[arg(long, value_name = "SEED")]
    pub mock_seed: Option<u64>,
    /// Only fetch records of this split (train, validation, test).
    #[arg(long, value_parser = parse_split)]
    pub split: Option<Split>,
    /// Images kept per site, 1 to 20.
    #[arg(long, default_value_t = 20)]
    pub max_images: usize,
    /// Results with an edge below this many pixels are dropped.
    #[arg(long, default_value_t = 64)]
    pub min_edge: u32,
    /// Square results up to this edge length count as icons.
    #[arg(long, default_value_t = 128)]
    pub icon_max: u32,
    /// Accepted MIME type; repeat for several. Defaults to JPEG, PNG, WebP and BMP.
    #[arg(long = "allowed-mime", value_name = "MIME")]
    pub allowed_mimes: Vec<String>,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 20.0)]
    pub timeout_secs: f64,
    /// Sites fetched concurrently.
    #[arg(long, default_value_t = 4)]
    pub max_concurrent: usize,
    /// Minimum delay between requests to one host, in milliseconds.
    #[arg(long, default_value_t = 0)]
    pub per_host_delay_ms: u64,
    /// Search query: the full URL or its host name.
    #[arg(long, value_parser = parse_query_mode, default_value = "url")]
    pub query_mode: QueryMode,
    /// Write the per-site batch report (JSON) here.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScorerKind {
    Stub,
    Precomputed,
    External,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GranularityArg {
    Site,
    Image,
}

impl From<GranularityArg> for Granularity {
    fn from(g: GranularityArg) -> Self {
        match g {
            GranularityArg::Site => Granularity::Site,
            GranularityArg::Image => Granularity::Image,
        }
    }
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Dataset manifest (CSV or JSON).
    #[arg(long, value_name = "FILE")]
    pub manifest: PathBuf,
    /// Image root holding <site_id>/NN.jpg.
    #[arg(long, value_name = "DIR")]
    pub images: PathBuf,
    /// Directory for <site_id>.json score documents.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Score source.
    #[arg(long, value_enum, default_value = "stub")]
    pub scorer: ScorerKind,
    /// Stub: random seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Stub: probability that an image's argmax is the true class.
    #[arg(long, value_parser = parse_rate, default_value = "0.6")]
    pub p: f64,
    /// Stub: per-class override as LABEL=RATE; repeatable.
    #[arg(long = "class-p", value_parser = parse_class_rate, value_name = "LABEL=RATE")]
    pub class_p: Vec<(String, f64)>,
    /// Stub: Dirichlet concentration of each score row.
    #[arg(long, default_value_t = 1.0)]
    pub concentration: f64,
    /// Precomputed: directory of <site_id>.json documents.
    #[arg(long, value_name = "DIR")]
    pub precomputed: Option<PathBuf>,
    /// External: adapter executable.
    #[arg(long, value_name = "CMD")]
    pub adapter: Option<String>,
    /// External: adapter argument; repeatable.
    #[arg(long = "adapter-arg", value_name = "ARG", allow_hyphen_values = true)]
    pub adapter_args: Vec<String>,
    /// External: one request per site or per image.
    #[arg(long, value_enum, default_value = "site")]
    pub granularity: GranularityArg,
    /// Only score records of this split.
    #[arg(long, value_parser = parse_split)]
    pub split: Option<Split>,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassifyFormat {
    Table,
    Json,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Score document, long-form score CSV, or a directory of <site_id>.json.
    #[arg(long, value_name = "PATH")]
    pub scores: PathBuf,
    /// Site to classify.
    #[arg(long)]
    pub site: String,
    /// Fusion metric such as A15; repeatable. Defaults to all twelve.
    #[arg(long = "metric", value_parser = parse_metric)]
    pub metrics: Vec<MetricId>,
    /// Manifest supplying the labels (needed for CSV scores).
    #[arg(long, value_name = "FILE")]
    pub manifest: Option<PathBuf>,
    /// Row validation: softmax (rows sum to 1) or bounded.
    #[arg(long, value_parser = parse_mode, default_value = "softmax")]
    pub mode: SchemaMode,
    /// Output: table or json.
    #[arg(long, value_enum, default_value = "table")]
    pub format: ClassifyFormat,
}

#[derive(Debug, Args)]
pub struct ComparisonArgs {
    /// Baseline numbers as row,column,accuracy CSV; adds a comparison table.
    #[arg(long, value_name = "FILE")]
    pub baselines: Option<PathBuf>,
    /// Comparison row for this run.
    #[arg(long, default_value = "this run")]
    pub row: String,
    /// Comparison column for this run.
    #[arg(long, default_value = "descimg")]
    pub column: String,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Dataset manifest (CSV or JSON).
    #[arg(long, value_name = "FILE")]
    pub manifest: PathBuf,
    /// Directory of score files (*.json, *.csv).
    #[arg(long, value_name = "DIR")]
    pub scores: PathBuf,
    /// Row validation: softmax (rows sum to 1) or bounded.
    #[arg(long, value_parser = parse_mode, default_value = "softmax")]
    pub mode: SchemaMode,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// table, csv, json or plot-series.
    #[arg(long, value_parser = parse_format, default_value = "table")]
    pub format: ReportFormat,
    /// Write here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub comparison: ComparisonArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Dataset manifest (CSV or JSON).
    #[arg(long, value_name = "FILE")]
    pub manifest: PathBuf,
    /// Directory containing epoch_NNN score directories.
    #[arg(long, value_name = "DIR")]
    pub snapshots: PathBuf,
    /// Row validation: softmax (rows sum to 1) or bounded.
    #[arg(long, value_parser = parse_mode, default_value = "softmax")]
    pub mode: SchemaMode,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// table, csv, json or plot-series.
    #[arg(long, value_parser = parse_format, default_value = "table")]
    pub format: ReportFormat,
    /// Write here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Dataset manifest (CSV or JSON).
    #[arg(long, value_name = "FILE")]
    pub manifest: PathBuf,
    /// Image root holding <site_id>/NN.jpg.
    #[arg(long, value_name = "DIR")]
    pub images: PathBuf,
    /// Write histogram.csv, splits.csv, languages.csv and stats.json here;
    /// otherwise print the JSON.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Ratios at or above this percentage share the last bin.
    #[arg(long, default_value_t = 300)]
    pub max_ratio_percent: u32,
    /// Edge length an image must exceed on both sides to count as large.
    #[arg(long, default_value_t = 224)]
    pub large_edge: u32,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// JSON report or series written by evaluate or sweep.
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// table, csv, json or plot-series.
    #[arg(long, value_parser = parse_format, default_value = "table")]
    pub format: ReportFormat,
    /// Write here instead of stdout.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub comparison: ComparisonArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Number of sites.
    #[arg(long, default_value_t = 500)]
    pub sites: usize,
    /// Number of classes.
    #[arg(long, default_value_t = 4)]
    pub classes: usize,
    /// Images per site, 1 to 20.
    #[arg(long, default_value_t = 20)]
    pub images: u8,
    /// Per-image probability that the argmax is the true class.
    #[arg(long, value_parser = parse_rate, default_value = "0.6")]
    pub p: f64,
    /// Random seed; the same seed always yields the same tree.
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Dirichlet concentration of each score row.
    #[arg(long, default_value_t = 1.0)]
    pub concentration: f64,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[cfg(test)]
mod tests {
    use clap::CommandFactory;

    use super::Cli;

    #[test]
    fn every_argument_has_help() {
        let cli = Cli::command();
        cli.clone().debug_assert();
        for sub in cli.get_subcommands() {
            assert!(sub.get_about().is_some(), "{}", sub.get_name());
            for arg in sub.get_arguments() {
                if matches!(arg.get_id().as_str(), "help" | "version") {
                    continue;
                }
                assert!(arg.get_help().is_some(), "{} --{}", sub.get_name(), arg.get_id());
            }
        }
    }
}
