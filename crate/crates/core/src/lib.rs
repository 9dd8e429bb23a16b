//! Attribution of model performance changes to shifts in causal mechanisms.
//!
//! A causal graph splits the data into mechanisms, one per node. The
//! performance change between a source and a target environment is shared
//! among the mechanisms with Shapley values, where the value of a coalition
//! is the source loss reweighted so that its members follow the target
//! distribution. The importance weights come from domain classifiers.

pub mod data;
pub mod error;
pub mod experiments;
pub mod game;
pub mod graph;
pub mod oracle;
pub mod ratio;
pub mod shapley;

pub use data::{EnvironmentPair, MetricKind, MetricSpec, Normalization, TabularDataset};
pub use error::{Error, Result, Stage};
pub use game::{Coalition, GameSettings, ShiftGame, TableGame, ValueFunction};
pub use graph::{candidate_set, parse_graph, CausalGraph, NodeSpec};
pub use ratio::{EstimatorConfig, EstimatorKind, WeightSet};
pub use shapley::{
    attribute, attribute_datasets, attribute_env, exact_shapley, permutation_shapley,
    AttributionReport, AttributionSettings, Method,
};
