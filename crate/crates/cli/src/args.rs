use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "relbelief", version, about = "Relative belief estimates, credible regions and simulations")]
pub struct Cli {
    /// Directory for CSV/JSON artifacts and the run manifest.
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,

    /// Worker threads for parallel stages; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    pub verbose: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Point estimate of psi at an observation.
    Estimate(EstimateArgs),
    /// HPD, relative surprise or lowest posterior loss region.
    Region(RegionArgs),
    /// Two-class Bernoulli classifier.
    Classify(ClassifyArgs),
    /// Closed-form and model-file predictions.
    #[command(subcommand)]
    Predict(PredictCommand),
    /// Monte Carlo misclassification table for the Beta-Bernoulli predictor.
    #[command(name = "simulate-table1")]
    SimulateTable1(SimulateArgs),
    /// Grid refinement study on a continuous testbed.
    Converge(ConvergeArgs),
    /// Check a model file strictly.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Lrse,
    Map,
    Bayes,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Hpd,
    Rs,
    Lpl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodArg {
    Map,
    Lrse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LawArg {
    Prior,
    Conjugate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Testbed {
    #[value(name = "normal-normal")]
    NormalNormal,
}

#[derive(Debug, Args, Serialize)]
pub struct ModelArgs {
    /// Model file (TOML).
    #[arg(long)]
    pub model: PathBuf,
    /// Observed data: a sample-space index for tabulated models, a value otherwise.
    #[arg(long, allow_hyphen_values = true)]
    pub x: String,
}

#[derive(Debug, Args, Serialize)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value = "lrse")]
    pub estimator: Estimator,
    /// zero-one | prior-based | capped:ETA | ball:LAMBDA | discretized:LAMBDA:ETA | weighted:FILE
    #[arg(long, default_value = "prior-based")]
    pub loss: String,
}

#[derive(Debug, Args, Serialize)]
pub struct RegionArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum)]
    pub family: Family,
    #[arg(long)]
    pub gamma: f64,
    /// Loss of lowest posterior loss regions.
    #[arg(long, default_value = "prior-based")]
    pub loss: String,
    /// Capped-loss sweep, e.g. `eta=0.1,0.01,0.001`.
    #[arg(long)]
    pub sweep: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub psi1: f64,
    #[arg(long)]
    pub psi2: f64,
    /// Prior probability of psi2.
    #[arg(long)]
    pub epsilon: f64,
    /// Observed trial outcome, 0 or 1.
    #[arg(long)]
    pub x: u8,
    #[arg(long, value_enum, default_value = "lrse")]
    pub method: MethodArg,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum PredictCommand {
    /// Class of a new case from labelled cases and a Beta prior.
    Class(PredictClassArgs),
    /// Linear-Gaussian regression estimate and prediction at covariates w.
    Regression(RegressionArgs),
    /// Predictive relative belief for the future kernel of a model file.
    Model(ModelArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct PredictClassArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub n: u64,
    /// Mean class label of the n labelled cases.
    #[arg(long)]
    pub cbar: f64,
    /// Class likelihood ratio f1(x)/f0(x) at the new case.
    #[arg(long, conflicts_with_all = ["mu", "x_new"])]
    pub f_ratio: Option<f64>,
    /// Class-1 mean for unit-variance Gaussian classes.
    #[arg(long, requires = "x_new", allow_hyphen_values = true)]
    pub mu: Option<f64>,
    /// Feature of the new case.
    #[arg(long, requires = "mu", allow_hyphen_values = true)]
    pub x_new: Option<f64>,
    #[arg(long, value_enum, default_value = "lrse")]
    pub method: MethodArg,
}

#[derive(Debug, Args, Serialize)]
pub struct RegressionArgs {
    /// Design matrix rows separated by `;`, entries by `,`.
    #[arg(long, allow_hyphen_values = true)]
    pub design: String,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub y: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub w: Vec<f64>,
    #[arg(long)]
    pub sigma2: f64,
    #[arg(long)]
    pub tau2: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// Replications per (beta, class) cell.
    #[arg(long, default_value_t = 1_000_000)]
    pub reps: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub mu: f64,
    #[arg(long, default_value_t = 10)]
    pub n: u64,
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub alphas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "1,14,32,100")]
    pub betas: Vec<f64>,
    #[arg(long, value_enum, default_value = "prior")]
    pub law: LawArg,
}

#[derive(Debug, Args, Serialize)]
pub struct ConvergeArgs {
    #[arg(long, value_enum, default_value = "normal-normal")]
    pub testbed: Testbed,
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub x: f64,
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.1,0.05,0.025")]
    pub lambdas: Vec<f64>,
    #[arg(long, default_value_t = 0.9)]
    pub gamma: f64,
    /// Caps of the lowest posterior loss regions.
    #[arg(long, value_delimiter = ',', default_value = "1e-4,1e-6,1e-8")]
    pub etas: Vec<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateArgs {
    #[arg(long)]
    pub model: PathBuf,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Estimate(_) => "estimate",
            Command::Region(_) => "region",
            Command::Classify(_) => "classify",
            Command::Predict(_) => "predict",
            Command::SimulateTable1(_) => "simulate-table1",
            Command::Converge(_) => "converge",
            Command::Validate(_) => "validate",
        }
    }
}
