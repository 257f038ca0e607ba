use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use consilience::nullmodels::ClipMode;
use consilience::{NullKind, ScalarKind};

#[derive(Debug, Parser)]
#[command(
    name = "consilience",
    version,
    about = "Consilience (C) goodness-of-fit analysis"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decompose error, weight responses and report C, joint C and significance.
    Analyze(AnalyzeArgs),
    /// Sample a RandMix or RandNorm null distribution of C.
    Null(NullArgs),
    /// Exact RandMix means over every pairing (3 ≤ n ≤ 8).
    Enumerate(EnumerateArgs),
    /// Critical C values from the tabulated curves.
    Critical(CriticalArgs),
    /// C alongside R², the residual regression F test, Wilcoxon and MSSD.
    Compare(CompareArgs),
    /// Render scatter plots and the nomogram from a JSON report.
    Plot(PlotArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV with `case,<name>_obs,<name>_mod[,<name>_se]` columns.
    pub input: PathBuf,
    /// JSON sidecar configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Error scalar: stdev, iqr, mean or median.
    #[arg(long)]
    pub scalar: Option<ScalarKind>,
    /// Maximum number of data rows accepted.
    #[arg(long)]
    pub max_rows: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Tabulated alpha levels to report (repeatable or comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub alpha: Vec<f64>,
    /// Write report.json and report.txt here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct NullArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value = "randnorm")]
    pub kind: NullKind,
    /// Number of replicates (default: config, then 1000).
    #[arg(long)]
    pub reps: Option<usize>,
    /// RNG seed (default: config, then CONSILIENCE_SEED, then generated).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = ClipArg::Clamp)]
    pub clip: ClipArg,
    /// Write null_c.csv and null.json here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClipArg {
    Clamp,
    Truncate,
}

impl From<ClipArg> for ClipMode {
    fn from(c: ClipArg) -> Self {
        match c {
            ClipArg::Clamp => ClipMode::Clamp,
            ClipArg::Truncate => ClipMode::Truncate,
        }
    }
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Only this series.
    #[arg(long)]
    pub series: Option<String>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct CriticalArgs {
    /// Tabulated alpha levels (default: all five).
    #[arg(long, value_delimiter = ',')]
    pub alpha: Vec<f64>,
    /// M·effN directly.
    #[arg(long, conflicts_with_all = ["m", "effn"])]
    pub mn: Option<f64>,
    /// Number of responses; use with --effn.
    #[arg(long, requires = "effn")]
    pub m: Option<usize>,
    #[arg(long, requires = "m")]
    pub effn: Option<f64>,
    /// Write a nomogram table (CSV) to this path.
    #[arg(long)]
    pub nomogram: Option<PathBuf>,
    #[arg(long, default_value_t = 2.0)]
    pub lo: f64,
    #[arg(long, default_value_t = 1000.0)]
    pub hi: f64,
    #[arg(long, default_value_t = 100)]
    pub points: usize,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Write compare.json and compare.txt here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// A report.json written by `analyze`.
    pub report: PathBuf,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}
