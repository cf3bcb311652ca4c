use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

const DATA_HELP: &str = "Dataset: blobs:CxN[:spread] | spirals:N[:noise] | csv:PATH:C | cifar10:DIR";

#[derive(Parser, Debug)]
#[command(name = "lrclab", version, about = "Local Rademacher complexity lab for small ReLU networks")]
pub struct Cli {
    /// Worker threads for parallel evaluation.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train an MLP with the hinge or cross-entropy loss plus lambda * R.
    Train(TrainArgs),
    /// Estimate global or local Rademacher complexity at a checkpoint.
    EstimateRc(EstimateArgs),
    /// Check the margin (1) or cross-entropy (2) LRC bound at a checkpoint.
    VerifyBounds(VerifyArgs),
    /// Compare analytic and finite-difference gradients of loss + lambda * R.
    Gradcheck(GradcheckArgs),
    /// Write a synthetic dataset as CSV.
    GenData(GenDataArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LossArg {
    Hinge,
    Ce,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ScheduleArg {
    Step,
    Cosine,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PrecisionArg {
    F32,
    F64,
}

/// Options shared by every command that reads a resolved JSON config.
#[derive(Args, Debug, Default)]
pub struct ConfigArgs {
    /// JSON config; flags given on the command line override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Print the resolved config as JSON and exit.
    #[arg(long)]
    pub print_config: bool,
}

#[derive(Args, Debug, Default)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub loss: Option<LossArg>,
    /// Regularization weight; a bare `--lambda` means 0.5. Default 0.
    #[arg(long, num_args = 0..=1, default_missing_value = "0.5", allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// Hinge margin scale.
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// Sign draws per regularizer evaluation.
    #[arg(long = "K")]
    pub k: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Initial learning rate.
    #[arg(long, allow_negative_numbers = true)]
    pub lr: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub momentum: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub weight_decay: Option<f64>,
    #[arg(long, value_enum)]
    pub schedule: Option<ScheduleArg>,
    /// Step-schedule milestones (epochs); default 50% and 75% of --epochs.
    #[arg(long, value_delimiter = ',')]
    pub milestones: Option<Vec<usize>>,
    /// Step-schedule decay factor.
    #[arg(long)]
    pub lr_factor: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, help = DATA_HELP)]
    pub data: Option<String>,
    /// Hidden layer widths.
    #[arg(long, value_delimiter = ',')]
    pub hidden: Option<Vec<usize>>,
    /// Train, validation and test fractions.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    pub split: Option<Vec<f64>>,
    /// JSONL metrics file (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Network checkpoint written at the end (and every --checkpoint-every epochs).
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
    /// Deterministic output: wall_ms is written as 0.
    #[arg(long)]
    pub bit_exact: bool,
    #[arg(long, value_enum)]
    pub precision: Option<PrecisionArg>,
    /// Train on the bare loss; R is still computed and logged.
    #[arg(long)]
    pub no_regularizer: bool,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Global,
    LrcMargin,
    LrcCe,
}

/// Checkpoint, data and sampling options shared by the lab commands.
#[derive(Args, Debug, Default)]
pub struct LabArgs {
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long, help = DATA_HELP)]
    pub data: Option<String>,
    /// Split used when the network was trained; the train part is evaluated.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    pub split: Option<Vec<f64>>,
    /// Use only the first N training points.
    #[arg(long)]
    pub points: Option<usize>,
    /// Ball radius; default 1% of the checkpoint's weight norm.
    #[arg(long, allow_negative_numbers = true)]
    pub r: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub sigma_samples: Option<usize>,
    /// Enumerate every sign pattern instead of sampling.
    #[arg(long)]
    pub exhaustive: bool,
    #[arg(long)]
    pub ball_samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON report file (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub config: ConfigArgs,
}

#[derive(Args, Debug, Default)]
pub struct EstimateArgs {
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    #[command(flatten)]
    pub lab: LabArgs,
}

#[derive(Args, Debug, Default)]
pub struct VerifyArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub theorem: Option<u8>,
    /// Random pairs for the logsumexp Lipschitz premise.
    #[arg(long)]
    pub premise_pairs: Option<usize>,
    /// Stop sampling after this many milliseconds; the report is then incomplete.
    #[arg(long)]
    pub time_limit_ms: Option<u64>,
    #[command(flatten)]
    pub lab: LabArgs,
}

#[derive(Args, Debug)]
pub struct GradcheckArgs {
    #[arg(long, value_enum, default_value = "ce")]
    pub loss: LossArg,
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub lambda: f64,
    #[arg(long = "K", default_value_t = 2)]
    pub k: usize,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-5)]
    pub tolerance: f64,
    /// Central-difference step.
    #[arg(long, default_value_t = 1e-6)]
    pub step: f64,
    #[arg(long, default_value_t = 4)]
    pub dim: usize,
    #[arg(long, value_delimiter = ',', default_value = "8,8")]
    pub hidden: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    pub classes: usize,
    #[arg(long, default_value_t = 8)]
    pub batch: usize,
    /// Corrupts one analytic gradient coordinate (negative control).
    #[arg(long, hide = true)]
    pub sabotage: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GenKindArg {
    Blobs,
    Spirals,
}

#[derive(Args, Debug)]
pub struct GenDataArgs {
    #[arg(long, value_enum)]
    pub kind: GenKindArg,
    #[arg(long, default_value_t = 3)]
    pub classes: usize,
    #[arg(long, default_value_t = 100)]
    pub per_class: usize,
    /// Blob input dimension; default max(2, classes - 1).
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, default_value_t = crate::dataspec::DEFAULT_SPREAD)]
    pub spread: f64,
    #[arg(long, default_value_t = crate::dataspec::DEFAULT_NOISE)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}
