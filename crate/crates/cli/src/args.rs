use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(
    name = "ftchain",
    version,
    about = "Trajectory geometry for stochastic optimizers"
)]
#[command(args_override_self = true, propagate_version = true)]
pub struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// File of `key = value` lines used as defaults for the subcommand's flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print progress and diagnostics to stderr.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate a process and write its trajectory as CSV.
    Simulate(SimulateArgs),
    /// Estimate the normalized Fernique-Talagrand functional of a trajectory.
    Gamma2(Gamma2Args),
    /// Fit a power law to reciprocal increment norms (or raw samples).
    TailFit(TailFitArgs),
    /// Log-moment stable-index estimate from increments (or raw samples).
    StableIndex(StableIndexArgs),
    /// Empirical ball-mass curve, its lower tail exponent and kernel functional.
    Ballmass(BallmassArgs),
    /// K-function curve and its log-log slope.
    Kfunction(KfunctionArgs),
    /// Greedy covering numbers and the Dudley entropy integral.
    Cover(CoverArgs),
    /// Evaluate the plug-in generalization bounds.
    Bound(BoundArgs),
    /// Run a simulation study and write its report.
    Study(StudyArgs),
    /// Run the full trajectory pipeline on the trailing window of a trajectory.
    Analyze(AnalyzeArgs),
}

impl Command {
    pub const NAMES: [&'static str; 10] = [
        "simulate",
        "gamma2",
        "tail-fit",
        "stable-index",
        "ballmass",
        "kfunction",
        "cover",
        "bound",
        "study",
        "analyze",
    ];
}

#[derive(Debug, Args, Serialize)]
pub struct InputArgs {
    /// Trajectory CSV, one iterate per row.
    #[arg(long)]
    pub input: PathBuf,
    /// Skip the first row of the input.
    #[arg(long)]
    pub header: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct OutputArgs {
    /// JSON report path (default: stdout).
    #[arg(long)]
    #[serde(skip)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CurveArgs {
    /// Write the curve as two-column CSV.
    #[arg(long)]
    #[serde(skip)]
    pub curve: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum KindArg {
    GaussianWalk,
    StableLevyWalk,
    BetaPrimeWalk,
    PerturbedGdQuadratic,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub kind: KindArg,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Gaussian step scale, one value or one per coordinate.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub sigma: Vec<f64>,
    /// Stable index, or the first beta-prime shape.
    #[arg(long, default_value_t = 1.5)]
    pub alpha: f64,
    /// Stable scale.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    /// Second beta-prime shape.
    #[arg(long, default_value_t = 3.5)]
    pub beta: f64,
    /// Gradient step of the perturbed GD model.
    #[arg(long, default_value_t = 0.1)]
    pub gd_step: f64,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub curvature: Vec<f64>,
    /// Noise variance per coordinate of the perturbed GD model.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub noise: Vec<f64>,
    /// Start point of the perturbed GD model (default: origin).
    #[arg(long, value_delimiter = ',')]
    pub start: Option<Vec<f64>>,
    /// Trajectory CSV to write.
    #[arg(long)]
    #[serde(skip)]
    pub trajectory: PathBuf,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum ConventionArg {
    Population,
    Sample,
}

#[derive(Debug, Args, Serialize)]
pub struct OptimizerArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2000)]
    pub iterations: usize,
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    /// Base step size `a` of the `a / sqrt(t)` schedule.
    #[arg(long, default_value_t = 0.5)]
    pub step: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct Gamma2Args {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    /// Truncation radius (default: B / L when both are given, else 1).
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub loss_bound: Option<f64>,
    #[arg(long)]
    pub lipschitz: Option<f64>,
    /// Apply running-std normalization first.
    #[arg(long)]
    pub normalize: bool,
    #[arg(long, value_enum, default_value_t = ConventionArg::Population)]
    pub std_convention: ConventionArg,
    #[command(flatten)]
    #[serde(flatten)]
    pub opt: OptimizerArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct TailFitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    /// Treat the single input column as the samples themselves.
    #[arg(long)]
    pub raw: bool,
    /// Fixed cutoff instead of the KS search.
    #[arg(long)]
    pub xmin: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct StableIndexArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub raw: bool,
    #[arg(long, default_value_t = 10)]
    pub block_size: usize,
    /// Coordinate blocks as 1-based ranges, e.g. `1-3,4,5-8`; the median
    /// over blocks is reported.
    #[arg(long)]
    pub blocks: Option<String>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct RadiiArgs {
    /// Smallest radius (default: derived from the data).
    #[arg(long)]
    pub r_min: Option<f64>,
    /// Largest radius (default: derived from the data).
    #[arg(long)]
    pub r_max: Option<f64>,
    /// Number of log-spaced radii.
    #[arg(long, default_value_t = 200)]
    pub radii: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct BallmassArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub lags: Vec<usize>,
    #[command(flatten)]
    #[serde(flatten)]
    pub radii: RadiiArgs,
    #[arg(long, default_value_t = 0.01)]
    pub window_lo: f64,
    #[arg(long, default_value_t = 0.2)]
    pub window_hi: f64,
    /// Use the minimum over this many contiguous anchor blocks instead of the average.
    #[arg(long)]
    pub sup_anchors: Option<usize>,
    /// Also evaluate the kernel functional on [0, rho].
    #[arg(long)]
    pub rho: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub curve: CurveArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct KfunctionArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub radii: RadiiArgs,
    #[arg(long, default_value_t = 0.01)]
    pub slope_lo: f64,
    #[arg(long, default_value_t = 0.1)]
    pub slope_hi: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub curve: CurveArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct CoverArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    /// Number of evenly spaced radii in (0, rho].
    #[arg(long, default_value_t = 100)]
    pub radii: usize,
    #[command(flatten)]
    #[serde(skip)]
    pub curve: CurveArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct BoundArgs {
    #[arg(long, default_value_t = 1.0)]
    pub loss_bound: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lipschitz: f64,
    #[arg(long, default_value_t = 1.0)]
    pub rho: f64,
    /// Number of training samples.
    #[arg(long)]
    pub n: f64,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.0)]
    pub gamma2: f64,
    #[arg(long, default_value_t = 0.0)]
    pub i_inf: f64,
    #[arg(long, default_value_t = 0.0)]
    pub i_one: f64,
    #[arg(long, default_value_t = 1.0)]
    pub k1: f64,
    #[arg(long, default_value_t = 1.0)]
    pub k2: f64,
    /// Probability that the empirical risk exceeds the loss bound.
    #[arg(long)]
    pub tail_prob: Option<f64>,
    /// Lower tail exponent for the Ahlfors-regular bound (needs --c-rho).
    #[arg(long, requires = "c_rho")]
    pub alpha: Option<f64>,
    #[arg(long, requires = "alpha")]
    pub c_rho: Option<f64>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum StudyArg {
    Figure1Ordering,
    AppendixCCurve,
    GaussianDimension,
    ExponentComparison,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum NormalizationArg {
    Running,
    Global,
    None,
}

/// Unset flags fall back to the study's preset.
#[derive(Debug, Args, Serialize)]
pub struct StudyArgs {
    #[arg(long, value_enum)]
    pub name: StudyArg,
    #[arg(long)]
    pub replicates: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long, value_enum)]
    pub normalization: Option<NormalizationArg>,
    #[arg(long, value_enum)]
    pub std_convention: Option<ConventionArg>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub step: Option<f64>,
    #[arg(long)]
    pub block_size: Option<usize>,
    /// Directory for `<study>.json` and the CSV curves.
    #[arg(long)]
    #[serde(skip)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub input: InputArgs,
    /// Number of trailing iterates analyzed.
    #[arg(long, default_value_t = 200)]
    pub window: usize,
    #[arg(long, default_value_t = 0.25)]
    pub rho: f64,
    #[arg(long, default_value_t = 10)]
    pub block_size: usize,
    #[arg(long, default_value_t = 0.01)]
    pub window_lo: f64,
    #[arg(long, default_value_t = 0.2)]
    pub window_hi: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub radii: RadiiArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub opt: OptimizerArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutputArgs,
}
