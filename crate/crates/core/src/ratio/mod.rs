//! Density-ratio estimation with probabilistic domain classifiers.

mod boosting;
mod features;
mod logistic;
mod weights;

use serde::{Deserialize, Serialize};

pub use boosting::{fit_boosted_stumps, BoostConfig, BoostedTrees};
pub use features::FeatureMap;
pub use logistic::{fit_logistic, LogisticConfig, LogisticModel, LogisticObjective};
pub use weights::{
    build_weight_set, fit_weight_model, mechanism_log_weight, ClassifierRole, ParentModel,
    WeightModel, WeightSet,
};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    #[default]
    Gbt,
    Logistic,
}

/// Settings shared by every classifier fitted for one weight set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub kind: EstimatorKind,
    pub boost: BoostConfig,
    pub logistic: LogisticConfig,
    /// Probabilities are clamped to `[pclip, 1 - pclip]` before forming odds.
    pub pclip: f64,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        EstimatorConfig {
            kind: EstimatorKind::Gbt,
            boost: BoostConfig::default(),
            logistic: LogisticConfig::default(),
            pclip: 1e-3,
        }
    }
}

impl EstimatorConfig {
    /// Upper bound on any single mechanism weight, `((1 - pclip) / pclip)²`.
    pub fn weight_bound(&self) -> f64 {
        ((1.0 - self.pclip) / self.pclip).powi(2)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ProbClassifier {
    Logistic(LogisticModel),
    Boosted(BoostedTrees),
}

impl ProbClassifier {
    pub fn fit(
        features: &[f64],
        k: usize,
        labels: &[f64],
        config: &EstimatorConfig,
        seed: u64,
    ) -> Result<Self> {
        Ok(match config.kind {
            EstimatorKind::Gbt => {
                ProbClassifier::Boosted(fit_boosted_stumps(features, k, labels, &config.boost, seed)?)
            }
            EstimatorKind::Logistic => {
                ProbClassifier::Logistic(fit_logistic(features, k, labels, &config.logistic)?)
            }
        })
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        match self {
            ProbClassifier::Logistic(m) => m.predict_proba(x),
            ProbClassifier::Boosted(m) => m.predict_proba(x),
        }
    }
}
