use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use edgejudge_core::preprocess::FeatureConfig;

/// Lutz take-off edge judgment from pose and skate-angle time series.
#[derive(Debug, Parser)]
#[command(name = "edgejudge", version)]
pub struct Cli {
    /// Output directory for every artifact.
    #[arg(long, global = true, default_value = "edgejudge-out")]
    pub out: PathBuf,
    /// TOML file with default settings. Flags override it.
    #[arg(long, global = true)]
    pub settings: Option<PathBuf>,
    /// Worker threads (1 runs sequentially).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Record the wall-clock time in run.json.
    #[arg(long, global = true)]
    pub stamp: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic dataset under OUT/dataset.
    Synth(SynthArgs),
    /// Track skaters, find each jump and crop the pose sequences.
    Segment(SegmentArgs),
    /// Leave-one-skater-out cross-validation.
    Evaluate(EvaluateArgs),
    /// Feature importance, trajectory distances and angle curves.
    Analyze(AnalyzeArgs),
    /// Train on one manifest and judge the samples of another.
    Judge(JudgeArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub skaters: Option<usize>,
    /// Jumps per skater.
    #[arg(long)]
    pub jumps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub error_fraction: Option<f64>,
    /// Comma-separated per-skater error fractions.
    #[arg(long, value_delimiter = ',')]
    pub skater_error_fractions: Option<Vec<f64>>,
    /// Inside lean of edge errors, degrees.
    #[arg(long, allow_hyphen_values = true)]
    pub lean_error: Option<f64>,
    /// Outside lean of correct edges, degrees (negative).
    #[arg(long, allow_hyphen_values = true)]
    pub lean_correct: Option<f64>,
    /// Pose noise standard deviation in rig units.
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub fps: Option<f64>,
    /// Print the closed-form generator parameters and exit.
    #[arg(long)]
    pub describe: bool,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset manifest. Defaults to OUT/dataset/manifest.csv.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Longest occlusion gap (frames) repaired by interpolation.
    #[arg(long)]
    pub max_gap: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Apex to take-off gap in seconds.
    #[arg(long)]
    pub takeoff_offset: Option<f64>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Formula {
    Standard,
    AsPrinted,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Ground {
    PerSequence,
    PerFrame,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Train on unstandardized features.
    #[arg(long)]
    pub raw: bool,
    #[arg(long, value_enum)]
    pub ground: Option<Ground>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Feature configuration, e.g. cam-pos-12.
    #[arg(long, required_unless_present = "all_configs", conflicts_with = "all_configs")]
    pub config: Option<FeatureConfig>,
    /// Evaluate all ten configurations and write summary.csv.
    #[arg(long)]
    pub all_configs: bool,
    #[arg(long, value_enum)]
    pub accuracy_formula: Option<Formula>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Mode {
    ClassMeans,
    AllPairs,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Configuration whose model importance is reported.
    #[arg(long, default_value = "cam-pos-12")]
    pub config: FeatureConfig,
    /// Joints for the trajectory tables (comma-separated).
    #[arg(long, value_delimiter = ',', default_value = "l_foot,r_foot")]
    pub joints: Vec<String>,
    #[arg(long, value_enum, default_value = "class-means")]
    pub mode: Mode,
    /// Decimate before comparing trajectories.
    #[arg(long)]
    pub target_fps: Option<f64>,
}

#[derive(Debug, Args)]
pub struct JudgeArgs {
    /// Training manifest. Defaults to OUT/dataset/manifest.csv.
    #[arg(long)]
    pub train: Option<PathBuf>,
    /// Manifest of the samples to judge.
    #[arg(long)]
    pub samples: PathBuf,
    #[arg(long, default_value = "cam-pos-12")]
    pub config: FeatureConfig,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub max_gap: Option<usize>,
}
