//! `lb` — drive the logit re-scoring pipeline from the shell.
//!
//! Model subcommands: `fit` trains density models from labeled logits,
//! `tune` searches their hyperparameters, `score` applies a saved model,
//! and `eval` turns decisions into metric reports. Point-cloud
//! subcommands (`pc-crop`, `pc-cluster`, `pc-resample`) prepare LiDAR
//! object crops.
//!
//! Every randomized step draws from `--seed` (`LB_SEED` as fallback), so
//! identical inputs and seed always produce byte-identical output files.
//! Errors exit with a code per failure class: 2 usage, 3 bad parameter,
//! 4 unreadable input, 5 inconsistent data, 6 broken model file.

mod commands;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use logitbayes::inference::{FitCondition, Mode, Rule};
use logitbayes::Error;

#[derive(Parser)]
#[command(name = "lb", version, about = "Logit re-scoring and LiDAR crop pipeline")]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, env = "LB_SEED", default_value_t = 0)]
    seed: u64,

    /// Comma-separated class names, for inputs that do not carry them.
    #[arg(long, global = true, value_delimiter = ',')]
    classes: Vec<String>,

    /// Output file — or directory for subcommands that write several.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit per-class density models from labeled training logits.
    Fit(FitArgs),
    /// Search bandwidths, bin counts, and smoothing by genetic algorithm.
    Tune(TuneArgs),
    /// Score a logit table with a saved model and write decisions.
    Score(ScoreArgs),
    /// Evaluate decisions, or compare scoring rules on raw logits.
    Eval(EvalArgs),
    /// Keep the points that project into a 2D image box.
    PcCrop(PcCropArgs),
    /// Keep the foreground cluster of a cropped cloud.
    PcCluster(PcClusterArgs),
    /// Resample a cloud to a fixed number of points.
    PcResample(PcResampleArgs),
}

/// Which density models a command fits.
#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    /// Likelihood CDFs only.
    Ml,
    /// Likelihood and prior CDFs.
    Map,
}

impl From<ModeArg> for Mode {
    fn from(arg: ModeArg) -> Mode {
        match arg {
            ModeArg::Ml => Mode::Ml,
            ModeArg::Map => Mode::Map,
        }
    }
}

/// Scoring rule applied to a logit vector.
#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RuleArg {
    Softmax,
    Ml,
    Map,
}

impl From<RuleArg> for Rule {
    fn from(arg: RuleArg) -> Rule {
        match arg {
            RuleArg::Softmax => Rule::Softmax,
            RuleArg::Ml => Rule::Ml,
            RuleArg::Map => Rule::Map,
        }
    }
}

/// How training rows are assigned to classes.
#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ConditionArg {
    /// Group by ground-truth label.
    Truth,
    /// Group by the row's own argmax.
    Predicted,
}

impl From<ConditionArg> for FitCondition {
    fn from(arg: ConditionArg) -> FitCondition {
        match arg {
            ConditionArg::Truth => FitCondition::GroundTruth,
            ConditionArg::Predicted => FitCondition::Predicted,
        }
    }
}

#[derive(Args)]
struct FitArgs {
    /// Labeled training logits (CSV).
    #[arg(long)]
    train: PathBuf,

    /// Per-class KDE bandwidths, comma-separated; one value broadcasts.
    #[arg(long, value_delimiter = ',', required = true)]
    bandwidths: Vec<f64>,

    /// Per-class histogram bin counts (map mode); one value broadcasts.
    #[arg(long, value_delimiter = ',')]
    nbins: Vec<usize>,

    /// Additive smoothing constant.
    #[arg(long, default_value_t = 1e-7)]
    lambda: f64,

    #[arg(long, value_enum, default_value_t = ModeArg::Ml)]
    mode: ModeArg,

    #[arg(long, value_enum, default_value_t = ConditionArg::Truth)]
    condition: ConditionArg,
}

#[derive(Args)]
struct TuneArgs {
    /// Labeled training logits (CSV).
    #[arg(long)]
    train: PathBuf,

    /// Labeled validation logits the search cost is measured on (CSV).
    #[arg(long)]
    val: PathBuf,

    #[arg(long, value_enum, default_value_t = ModeArg::Map)]
    mode: ModeArg,

    /// Individuals per generation.
    #[arg(long, default_value_t = 200)]
    population: usize,

    /// Fraction of children produced by crossover rather than mutation.
    #[arg(long, default_value_t = 0.8)]
    crossover_fraction: f64,

    /// Generation cap; defaults to 100 x the number of tuned values.
    #[arg(long)]
    generations: Option<usize>,

    /// Best individuals copied unchanged into the next generation.
    #[arg(long, default_value_t = 2)]
    elite: usize,

    /// Individuals drawn per parent-selection tournament.
    #[arg(long, default_value_t = 2)]
    tournament: usize,

    /// Mutation standard deviation as a fraction of each value's range.
    #[arg(long, default_value_t = 0.1)]
    mutation_scale: f64,

    /// Stop after this many generations without improvement.
    #[arg(long)]
    stall: Option<usize>,

    /// Bandwidth search range, as LO:HI.
    #[arg(long, value_parser = parse_f64_range, default_value = "0.01:5")]
    bandwidth_range: (f64, f64),

    /// Histogram bin-count search range, as LO:HI.
    #[arg(long, value_parser = parse_usize_range, default_value = "2:64")]
    nbins_range: (usize, usize),

    /// Smoothing-constant search range, as LO:HI.
    #[arg(long, value_parser = parse_f64_range, default_value = "1e-9:1e-5")]
    lambda_range: (f64, f64),
}

#[derive(Args)]
struct ScoreArgs {
    /// Saved model (JSON).
    #[arg(long)]
    model: PathBuf,

    /// Logits to score (CSV); labels may be empty.
    #[arg(long)]
    logits: PathBuf,

    /// Scoring rule; defaults to the rule the model was fitted for.
    #[arg(long, value_enum)]
    rule: Option<RuleArg>,
}

#[derive(Args)]
struct EvalArgs {
    /// Decision CSV (id,label,pred,...) to evaluate as-is.
    #[arg(long, conflicts_with_all = ["logits", "model", "rules"])]
    pred: Option<PathBuf>,

    /// Labeled logits (CSV) to score and evaluate per rule.
    #[arg(long)]
    logits: Option<PathBuf>,

    /// Saved model, needed for the ml and map rules.
    #[arg(long)]
    model: Option<PathBuf>,

    /// Rule to compare; repeat for a side-by-side table.
    #[arg(long = "rule", value_enum)]
    rules: Vec<RuleArg>,
}

#[derive(Args)]
struct PcCropArgs {
    /// Binary point cloud (x, y, z, reflectance float quadruples).
    #[arg(long)]
    cloud: PathBuf,

    /// Calibration text file with P*, R*_rect, and Tr_velo_to_cam keys.
    #[arg(long)]
    calib: PathBuf,

    /// Camera the box coordinates refer to.
    #[arg(long, default_value_t = 2)]
    camera: usize,

    /// Image-space box, as X_MIN,Y_MIN,X_MAX,Y_MAX pixels.
    #[arg(long, value_parser = parse_pixel_box)]
    bbox: PixelBox,

    /// Discard points closer than this along the sensor's forward axis.
    #[arg(long, default_value_t = 5.0)]
    near_limit: f64,
}

#[derive(Args)]
struct PcClusterArgs {
    /// Binary point cloud, typically a box crop.
    #[arg(long)]
    cloud: PathBuf,

    /// Range gap that separates clusters, in meters.
    #[arg(long, default_value_t = 0.25)]
    gap: f64,

    /// Weight bias toward near clusters, in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    confidence: f64,
}

#[derive(Args)]
struct PcResampleArgs {
    /// Binary point cloud.
    #[arg(long)]
    cloud: PathBuf,

    /// Exact number of points to emit.
    #[arg(long, default_value_t = 512)]
    target: usize,

    /// Neighbor pool size for synthesizing upsampled points.
    #[arg(long, default_value_t = 4)]
    neighbors: usize,
}

/// Image-space crop box parsed from `X_MIN,Y_MIN,X_MAX,Y_MAX`.
#[derive(Clone, Copy)]
struct PixelBox {
    x_min: f64,
    y_min: f64,
    x_max: f64,
    y_max: f64,
}

fn parse_pixel_box(s: &str) -> Result<PixelBox, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 4 {
        return Err(format!("expected X_MIN,Y_MIN,X_MAX,Y_MAX, got {s:?}"));
    }
    let mut vals = [0f64; 4];
    for (v, part) in vals.iter_mut().zip(&parts) {
        *v = part
            .trim()
            .parse()
            .map_err(|_| format!("bad coordinate {part:?}"))?;
    }
    Ok(PixelBox {
        x_min: vals[0],
        y_min: vals[1],
        x_max: vals[2],
        y_max: vals[3],
    })
}

fn parse_f64_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected LO:HI, got {s:?}"))?;
    let lo: f64 = lo.trim().parse().map_err(|_| format!("bad number {lo:?}"))?;
    let hi: f64 = hi.trim().parse().map_err(|_| format!("bad number {hi:?}"))?;
    Ok((lo, hi))
}

fn parse_usize_range(s: &str) -> Result<(usize, usize), String> {
    let (lo, hi) = s
        .split_once(':')
        .ok_or_else(|| format!("expected LO:HI, got {s:?}"))?;
    let lo: usize = lo.trim().parse().map_err(|_| format!("bad count {lo:?}"))?;
    let hi: usize = hi.trim().parse().map_err(|_| format!("bad count {hi:?}"))?;
    Ok((lo, hi))
}

/// One exit code per error class, so scripts can tell what went wrong.
fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidParameter(_) => 3,
        Error::Parse { .. } | Error::Io { .. } => 4,
        Error::InvalidData(_) => 5,
        Error::Model { .. } => 6,
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = commands::dispatch(cli) {
        eprintln!("error: {err}");
        std::process::exit(exit_code(&err));
    }
}
