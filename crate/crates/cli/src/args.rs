use std::net::SocketAddr;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "blinkscope", version, about = "Blink detection and statistics from eye-aspect-ratio recordings")]
pub struct Cli {
    /// Log filter, e.g. `warn` or `blinkscope=debug`.
    #[arg(long, global = true, env = "BLINKSCOPE_LOG", default_value = "info")]
    pub log: String,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Landmark CSV -> EAR score CSV.
    Ear(EarArgs),
    /// Score CSV -> blink table.
    Detect(DetectArgs),
    /// Blink statistics as CSV and JSON.
    Stats(StatsArgs),
    /// Summary figure (SVG) and its data (JSON).
    Summary(SummaryArgs),
    /// Every output of the pipeline in one run.
    All(AllArgs),
    /// Start the HTTP review service.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputKind {
    /// Landmarks when the header has no EAR columns and 25 or 37 fields.
    Auto,
    Scores,
    Landmarks,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    #[value(name = "2d")]
    TwoD,
    #[value(name = "3d")]
    ThreeD,
}

/// Where the two EAR series come from.
#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(short, long)]
    pub input: PathBuf,

    /// Frames per second of the recording.
    #[arg(long)]
    pub fps: f64,

    #[arg(long, value_enum, default_value_t = InputKind::Auto)]
    pub input_kind: InputKind,

    /// Left-eye score column; picked from the header when omitted.
    #[arg(long, requires = "right_column")]
    pub left_column: Option<String>,

    #[arg(long, requires = "left_column")]
    pub right_column: Option<String>,

    /// EAR variant for landmark input; defaults to 3D when depth is present.
    #[arg(long, value_enum)]
    pub variant: Option<Variant>,
}

/// Detection parameters. A `--params` file is applied first; flags given on
/// the command line override it.
#[derive(Debug, Default, Args)]
pub struct ParamArgs {
    /// Flat `key=value` parameter file.
    #[arg(long)]
    pub params: Option<PathBuf>,

    #[arg(long)]
    pub min_prominence: Option<f64>,

    #[arg(long)]
    pub min_distance: Option<usize>,

    #[arg(long)]
    pub min_width: Option<f64>,

    /// Maximum width in frames, or `none`.
    #[arg(long)]
    pub max_width: Option<String>,

    #[arg(long)]
    pub rel_height: Option<f64>,

    /// Odd moving-average window in frames, or `none`.
    #[arg(long)]
    pub smoothing_window: Option<String>,

    /// `auto` (Otsu per eye) or `manual`.
    #[arg(long)]
    pub threshold_mode: Option<String>,

    #[arg(long)]
    pub threshold_left: Option<f64>,

    #[arg(long)]
    pub threshold_right: Option<f64>,

    #[arg(long)]
    pub max_match_delay_ms: Option<f64>,

    #[arg(long)]
    pub otsu_bins: Option<usize>,
}

impl ParamArgs {
    /// The overrides as parameter-file assignments.
    pub fn assignments(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut push = |key, value: Option<String>| {
            if let Some(v) = value {
                out.push((key, v));
            }
        };
        push("min_prominence", self.min_prominence.map(|v| v.to_string()));
        push("min_distance", self.min_distance.map(|v| v.to_string()));
        push("min_width", self.min_width.map(|v| v.to_string()));
        push("max_width", self.max_width.clone());
        push("rel_height", self.rel_height.map(|v| v.to_string()));
        push("smoothing_window", self.smoothing_window.clone());
        push("threshold_mode", self.threshold_mode.clone());
        push("threshold_left", self.threshold_left.map(|v| v.to_string()));
        push("threshold_right", self.threshold_right.map(|v| v.to_string()));
        push("max_match_delay_ms", self.max_match_delay_ms.map(|v| v.to_string()));
        push("otsu_bins", self.otsu_bins.map(|v| v.to_string()));
        out
    }
}

#[derive(Debug, Args)]
pub struct EarArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[arg(short, long, default_value = "scores.csv")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub params: ParamArgs,

    #[arg(short, long, default_value = "blinks.csv")]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub params: ParamArgs,

    /// Blink table with corrected states to use instead of fresh detection.
    #[arg(long)]
    pub blinks: Option<PathBuf>,

    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SummaryArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub params: ParamArgs,

    /// Blink table with corrected states to use instead of fresh detection.
    #[arg(long)]
    pub blinks: Option<PathBuf>,

    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AllArgs {
    #[command(flatten)]
    pub input: InputArgs,

    #[command(flatten)]
    pub params: ParamArgs,

    #[arg(long, default_value = ".")]
    pub out: PathBuf,

    #[arg(long)]
    pub no_blinks: bool,

    #[arg(long)]
    pub no_stats: bool,

    #[arg(long)]
    pub no_summary_svg: bool,

    #[arg(long)]
    pub no_summary_json: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "BLINKSCOPE_BIND", default_value = "127.0.0.1:8750")]
    pub bind: SocketAddr,

    #[arg(long, env = "BLINKSCOPE_SNAPSHOT_DIR", default_value = "snapshots")]
    pub snapshot_dir: PathBuf,
}
