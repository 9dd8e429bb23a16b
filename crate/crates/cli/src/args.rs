use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use shiftshap::data::Normalization;
use shiftshap::ratio::{BoostConfig, EstimatorConfig, EstimatorKind, FeatureMap, LogisticConfig};
use shiftshap::shapley::{AttributionSettings, Method};
use shiftshap::{GameSettings, MetricKind, MetricSpec};

#[derive(Debug, Parser)]
#[command(name = "shiftshap", version, about = "Attribute model performance changes to shifted causal mechanisms")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Attribute the performance change between two CSV files
    Attribute(AttributeArgs),
    /// Run the pipeline on simulated data and compare with ground truth
    Synthetic(SyntheticArgs),
    /// Weight and attribution errors of the estimator as the sample grows
    Convergence(ConvergenceArgs),
    /// Closed-form Gaussian results or exact results for a discrete SCM
    Oracle(OracleArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    Gbt,
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FeatureMapArg {
    Raw,
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Squared,
    Brier,
    ZeroOne,
    Logloss,
    Precomputed,
}

impl From<MetricArg> for MetricKind {
    fn from(m: MetricArg) -> Self {
        match m {
            MetricArg::Squared => MetricKind::SquaredError,
            MetricArg::Brier => MetricKind::Brier,
            MetricArg::ZeroOne => MetricKind::ZeroOne,
            MetricArg::Logloss => MetricKind::LogLoss,
            MetricArg::Precomputed => MetricKind::Precomputed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Auto,
    Exact,
    Permutation,
}

#[derive(Debug, Clone, Args)]
pub struct EstimatorArgs {
    /// Domain classifier family
    #[arg(long, value_enum, default_value = "gbt")]
    pub estimator: EstimatorArg,
    /// Feature expansion for the logistic classifier
    #[arg(long, value_enum, default_value = "raw")]
    pub feature_map: FeatureMapArg,
    /// Number of boosting rounds
    #[arg(long, default_value_t = 100)]
    pub trees: usize,
    /// Depth of each boosted tree (at most 3)
    #[arg(long, default_value_t = 3)]
    pub depth: usize,
    /// Boosting learning rate
    #[arg(long, default_value_t = 0.1)]
    pub rate: f64,
    /// L2 penalty of the logistic classifier
    #[arg(long, default_value_t = 1e-4)]
    pub l2: f64,
    /// Probabilities are clipped to [pclip, 1 - pclip]
    #[arg(long, default_value_t = 1e-3)]
    pub pclip: f64,
}

impl EstimatorArgs {
    pub fn config(&self) -> EstimatorConfig {
        let defaults = EstimatorConfig::default();
        EstimatorConfig {
            kind: match self.estimator {
                EstimatorArg::Gbt => EstimatorKind::Gbt,
                EstimatorArg::Logistic => EstimatorKind::Logistic,
            },
            boost: BoostConfig {
                trees: self.trees,
                depth: self.depth,
                rate: self.rate,
                ..defaults.boost
            },
            logistic: LogisticConfig {
                l2: self.l2,
                feature_map: match self.feature_map {
                    FeatureMapArg::Raw => FeatureMap::Raw,
                    FeatureMapArg::Quadratic => FeatureMap::Quadratic,
                },
                ..defaults.logistic
            },
            pclip: self.pclip,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GameArgs {
    /// Master seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Estimate the grand coalition by reweighting instead of from target losses
    #[arg(long)]
    pub no_anchor_full: bool,
    /// Divide weighted losses by the weight sum instead of the sample count
    #[arg(long)]
    pub self_normalize: bool,
    /// Largest number of mechanisms solved by exact enumeration
    #[arg(long, default_value_t = 12)]
    pub exact_threshold: usize,
    /// Permutations sampled when the exact method is not used
    #[arg(long, default_value_t = 1000)]
    pub permutations: usize,
    /// Shapley method; auto picks exact within the threshold
    #[arg(long, value_enum, default_value = "auto")]
    pub method: MethodArg,
}

impl GameArgs {
    pub fn settings(&self, estimator: &EstimatorArgs, split_fraction: f64) -> AttributionSettings {
        let mut s = AttributionSettings::with_seed(self.seed);
        s.estimator = estimator.config();
        s.split_fraction = split_fraction;
        s.game = GameSettings {
            normalization: if self.self_normalize {
                Normalization::SelfNormalized
            } else {
                Normalization::Plain
            },
            anchor_full: !self.no_anchor_full,
        };
        s.exact_threshold = self.exact_threshold;
        s.permutations = self.permutations;
        s.method = match self.method {
            MethodArg::Auto => None,
            MethodArg::Exact => Some(Method::Exact),
            MethodArg::Permutation => Some(Method::Permutation),
        };
        s
    }
}

#[derive(Debug, Clone, Args)]
pub struct AttributeArgs {
    /// Source environment CSV
    #[arg(long)]
    pub source: PathBuf,
    /// Target environment CSV
    #[arg(long)]
    pub target: PathBuf,
    /// Causal graph JSON
    #[arg(long)]
    pub graph: PathBuf,
    /// Per-sample loss
    #[arg(long, value_enum, default_value = "precomputed")]
    pub metric: MetricArg,
    /// Prediction column for computed metrics
    #[arg(long, default_value = "pred")]
    pub pred_col: String,
    /// Label column for computed metrics
    #[arg(long, default_value = "y")]
    pub label_col: String,
    /// Loss column for the precomputed metric
    #[arg(long, default_value = "loss")]
    pub loss_col: String,
    /// Reverse every edge of the graph before attributing
    #[arg(long)]
    pub reverse_graph: bool,
    /// Share of each environment used to fit the weight models
    #[arg(long, default_value_t = 0.75)]
    pub split_fraction: f64,
    /// Write the report document here
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[command(flatten)]
    pub game: GameArgs,
}

impl AttributeArgs {
    pub fn metric(&self) -> MetricSpec {
        match self.metric {
            MetricArg::Precomputed => MetricSpec::precomputed(&self.loss_col),
            m => MetricSpec::prediction(m.into(), &self.pred_col, &self.label_col),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScenarioArg {
    Gaussian,
    Fivevar,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SettingArg {
    A,
    B,
    C,
    D,
}

#[derive(Debug, Clone, Args)]
pub struct GaussianArgs {
    #[arg(long, default_value_t = 0.0)]
    pub mu1: f64,
    /// Target means of X, comma separated
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    pub mu2: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub theta1: f64,
    /// Target coefficients of Y on X, comma separated
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.7,0.9,1.1,1.3")]
    pub theta2: Vec<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub sigma_x2: f64,
    #[arg(long, default_value_t = 0.25)]
    pub sigma_y2: f64,
    /// Coefficient of the model f(x) = phi x
    #[arg(long, default_value_t = 0.9)]
    pub phi: f64,
}

impl GaussianArgs {
    pub fn scenario(&self, mu2: f64, theta2: f64) -> shiftshap::oracle::GaussianScenario {
        shiftshap::oracle::GaussianScenario {
            mu1: self.mu1,
            mu2,
            theta1: self.theta1,
            theta2,
            sigma_x2: self.sigma_x2,
            sigma_y2: self.sigma_y2,
            phi: self.phi,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct SyntheticArgs {
    #[arg(long, value_enum)]
    pub scenario: ScenarioArg,
    /// Samples per environment (default 10000 for gaussian, 20000 for fivevar)
    #[arg(long)]
    pub n: Option<usize>,
    /// Five-variable target setting
    #[arg(long, value_enum, default_value = "a")]
    pub setting: SettingArg,
    /// Varied parameter of the setting: q for a, c, d and mu for b
    #[arg(long)]
    pub value: Option<f64>,
    /// Five-variable loss of the reference model
    #[arg(long, value_enum, default_value = "brier")]
    pub metric: MetricArg,
    /// Attribute with every edge of the true graph reversed
    #[arg(long)]
    pub reverse_graph: bool,
    /// Write the simulated CSVs and graph of each sweep point into this directory
    #[arg(long)]
    pub emit_dir: Option<PathBuf>,
    #[arg(long, default_value_t = 0.75)]
    pub split_fraction: f64,
    /// Write the results document here
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub gaussian: GaussianArgs,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
    #[command(flatten)]
    pub game: GameArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ConvergenceArgs {
    /// Samples per environment, comma separated
    #[arg(long, value_delimiter = ',', default_value = "1000,10000,50000")]
    pub ns: Vec<usize>,
    /// Repetitions per sample size
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.5)]
    pub split_fraction: f64,
    /// Write the results document here
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub estimator: EstimatorArgs,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    /// Discrete SCM JSON; prints its exact coalition values and attributions
    #[arg(long)]
    pub scm: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    pub mu1: f64,
    #[arg(long, default_value_t = 0.5)]
    pub mu2: f64,
    #[arg(long, default_value_t = 1.0)]
    pub theta1: f64,
    #[arg(long, default_value_t = 0.5)]
    pub theta2: f64,
    #[arg(long, default_value_t = 0.5)]
    pub sigma_x2: f64,
    #[arg(long, default_value_t = 0.25)]
    pub sigma_y2: f64,
    #[arg(long, default_value_t = 0.9)]
    pub phi: f64,
    /// Write the results document here
    #[arg(long)]
    pub out: Option<PathBuf>,
}
