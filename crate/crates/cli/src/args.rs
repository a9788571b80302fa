use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use labelfuse::{FitConfig, Format, OptimizerConfig};

#[derive(Debug, Parser)]
#[command(
    name = "labelfuse",
    version,
    about = "Fit generative label models and turn weak supervision into probabilistic labels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a generative label model and write a model file.
    Fit(FitCmd),
    /// Write per-row probabilities `index,p_positive`.
    Predict(PredictCmd),
    /// Decide between majority vote and a generative model.
    Optimize(OptimizeCmd),
    /// Learn a correlation structure at one threshold.
    Structure(StructureCmd),
    /// Learn structures over a threshold grid and pick the elbow.
    Sweep(SweepCmd),
    /// Report the optimizer bound and, given gold labels, the realised advantage.
    Advantage(AdvantageCmd),
    /// Generate a seeded synthetic dataset.
    Synth(SynthCmd),
    /// Score predictions and label-model baselines against gold labels.
    Eval(EvalCmd),
    /// Train a logistic regression on probabilistic labels.
    TrainDisc(TrainDiscCmd),
}

impl Command {
    pub fn run_args(&self) -> &RunArgs {
        match self {
            Command::Fit(c) => &c.run,
            Command::Predict(c) => &c.run,
            Command::Optimize(c) => &c.run,
            Command::Structure(c) => &c.run,
            Command::Sweep(c) => &c.run,
            Command::Advantage(c) => &c.run,
            Command::Synth(c) => &c.run,
            Command::Eval(c) => &c.run,
            Command::TrainDisc(c) => &c.run,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Single-threaded deterministic execution.
    #[arg(long)]
    pub strict: bool,
    /// Worker threads (ignored with --strict).
    #[arg(long)]
    pub threads: Option<usize>,
    /// File of `key=value` lines supplying defaults for any flag.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MatrixArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long, default_value_t = Format::Dense)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, default_value_t = FitConfig::default().epochs)]
    pub epochs: usize,
    #[arg(long, default_value_t = FitConfig::default().step_size)]
    pub step_size: f64,
    #[arg(long, default_value_t = FitConfig::default().gibbs_steps)]
    pub gibbs_steps: usize,
    #[arg(long, default_value_t = FitConfig::default().l2_reg)]
    pub l2: f64,
    #[arg(long, default_value_t = FitConfig::default().max_iters)]
    pub max_iters: usize,
    #[arg(long, default_value_t = FitConfig::default().tolerance)]
    pub tolerance: f64,
}

impl FitArgs {
    pub fn config(&self, seed: u64) -> FitConfig {
        FitConfig {
            epochs: self.epochs,
            step_size: self.step_size,
            gibbs_steps: self.gibbs_steps,
            l2_reg: self.l2,
            max_iters: self.max_iters,
            tolerance: self.tolerance,
            seed,
            ..FitConfig::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct OptimizerArgs {
    /// Minimum predicted advantage worth modelling.
    #[arg(long, default_value_t = OptimizerConfig::default().gamma)]
    pub gamma: f64,
    /// Threshold grid resolution.
    #[arg(long, default_value_t = OptimizerConfig::default().delta)]
    pub delta: f64,
    #[arg(long, default_value_t = OptimizerConfig::default().w_min)]
    pub w_min: f64,
    #[arg(long, default_value_t = OptimizerConfig::default().w_bar)]
    pub w_bar: f64,
    #[arg(long, default_value_t = OptimizerConfig::default().w_max)]
    pub w_max: f64,
}

impl OptimizerArgs {
    pub fn config(&self) -> OptimizerConfig {
        OptimizerConfig {
            gamma: self.gamma,
            delta: self.delta,
            w_min: self.w_min,
            w_bar: self.w_bar,
            w_max: self.w_max,
        }
    }
}

#[derive(Debug, Args)]
pub struct FitCmd {
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub matrix: MatrixArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    /// Independent model by exact maximum likelihood.
    #[arg(long, conflicts_with_all = ["correlations", "auto_structure", "l1"])]
    pub exact: bool,
    /// Pair list (`j,k` per line) to model as correlated.
    #[arg(long, conflicts_with_all = ["auto_structure", "l1"])]
    pub correlations: Option<PathBuf>,
    /// Choose the strategy and structure automatically.
    #[arg(long, conflicts_with = "l1")]
    pub auto_structure: bool,
    /// Learn the structure at this threshold before fitting.
    #[arg(long)]
    pub l1: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictCmd {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long, default_value_t = Format::Dense)]
    pub format: Format,
    /// Generative model file.
    #[arg(long, conflicts_with_all = ["mv", "disc_model"])]
    pub model: Option<PathBuf>,
    /// Majority vote: 1.0, 0.0 or 0.5 on a tie.
    #[arg(long, conflicts_with = "disc_model")]
    pub mv: bool,
    /// Discriminative model file; requires --features.
    #[arg(long, requires = "features")]
    pub disc_model: Option<PathBuf>,
    #[arg(long)]
    pub features: Option<PathBuf>,
    /// Gibbs samples per row for models with correlations.
    #[arg(long, default_value_t = 2000)]
    pub samples: usize,
    #[arg(long, default_value_t = 200)]
    pub burn_in: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OptimizeCmd {
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub matrix: MatrixArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StructureCmd {
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub matrix: MatrixArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    /// Penalty strength and selection threshold.
    #[arg(long)]
    pub l1: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepCmd {
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub matrix: MatrixArgs,
    #[command(flatten)]
    pub fit: FitArgs,
    #[arg(long, default_value_t = OptimizerConfig::default().delta)]
    pub delta: f64,
    /// Stop once a threshold selects no pairs.
    #[arg(long)]
    pub early_stop: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AdvantageCmd {
    #[command(flatten)]
    pub run: RunArgs,
    #[command(flatten)]
    pub matrix: MatrixArgs,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    #[arg(long)]
    pub gold: Option<PathBuf>,
    /// Take vote weights from the accuracy weights of a model file.
    #[arg(long, conflicts_with = "weights")]
    pub model: Option<PathBuf>,
    /// Comma-separated vote weights.
    #[arg(long)]
    pub weights: Option<String>,
    /// Generator sidecar from `synth`, for the true-weight advantage and density bounds.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    /// Class-balanced, 10% voting probability, accuracies around 0.75.
    Footnote7,
    /// Five copies of a coin flip plus five 99% accurate sources.
    Duplicated,
    /// Disjoint duplicated pairs among otherwise independent sources.
    Planted,
    /// Independent sources with one shared accuracy.
    Uniform,
    /// Sources that only vote on half of feature space, with features.
    Coverage,
}

#[derive(Debug, Args)]
pub struct SynthCmd {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long, value_enum)]
    pub preset: Preset,
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub propensity: Option<f64>,
    #[arg(long)]
    pub accuracy: Option<f64>,
    /// Half-width of the accuracy range for footnote7.
    #[arg(long, default_value_t = 0.0)]
    pub spread: f64,
    /// Number of duplicated pairs for planted.
    #[arg(long, default_value_t = 3)]
    pub pairs: usize,
    #[arg(long, default_value_t = Format::Dense)]
    pub format: Format,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalCmd {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long, default_value_t = Format::Dense)]
    pub format: Format,
    /// Model file whose accuracy weights define the weighted vote.
    #[arg(long, requires = "matrix")]
    pub model: Option<PathBuf>,
    /// Probabilities file written by `predict`.
    #[arg(long)]
    pub pred: Option<PathBuf>,
    /// Only score rows on which every source abstains.
    #[arg(long, requires = "matrix")]
    pub abstain_only: bool,
    /// Dataset name in the report table.
    #[arg(long, default_value = "data")]
    pub name: String,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainDiscCmd {
    #[command(flatten)]
    pub run: RunArgs,
    #[arg(long)]
    pub features: PathBuf,
    /// Probabilities file written by `predict`.
    #[arg(long)]
    pub labels: PathBuf,
    #[arg(long, default_value_t = FitConfig::default().l2_reg)]
    pub l2: f64,
    #[arg(long, default_value_t = FitConfig::default().max_iters)]
    pub max_iters: usize,
    #[arg(long, default_value_t = FitConfig::default().tolerance)]
    pub tolerance: f64,
    /// Leave out rows whose probability is exactly 0.5.
    #[arg(long)]
    pub skip_ties: bool,
    #[arg(long)]
    pub out: PathBuf,
}
