//! End-to-end attribution: load, validate, estimate weights, play the game.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::report::{AttributionReport, Diagnostics, Method};
use super::{exact_shapley, permutation_shapley, DEFAULT_EXACT_THRESHOLD};
use crate::data::{load_csv, EnvironmentPair, MetricSpec, TabularDataset};
use crate::error::{Error, Result, Stage, StageExt};
use crate::game::{make_game, GameSettings, ShiftGame};
use crate::graph::{candidate_set, parse_graph, validate_against_schema, CausalGraph};
use crate::ratio::{build_weight_set, EstimatorConfig};

/// Seeds derived from the master seed by fixed offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedPlan {
    pub split: u64,
    pub estimator: u64,
    pub permutation: u64,
}

impl SeedPlan {
    pub fn from_master(seed: u64) -> Self {
        SeedPlan {
            split: seed,
            estimator: seed.wrapping_add(1),
            permutation: seed.wrapping_add(2),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionSettings {
    pub seed: u64,
    pub seeds: SeedPlan,
    pub estimator: EstimatorConfig,
    /// Share of each environment used to fit the weight models.
    pub split_fraction: f64,
    pub game: GameSettings,
    pub exact_threshold: usize,
    /// Forces a method; otherwise exact iff the player count is within the threshold.
    pub method: Option<Method>,
    pub permutations: usize,
}

impl Default for AttributionSettings {
    fn default() -> Self {
        Self::with_seed(0)
    }
}

impl AttributionSettings {
    pub fn with_seed(seed: u64) -> Self {
        AttributionSettings {
            seed,
            seeds: SeedPlan::from_master(seed),
            estimator: EstimatorConfig::default(),
            split_fraction: 0.75,
            game: GameSettings::default(),
            exact_threshold: DEFAULT_EXACT_THRESHOLD,
            method: None,
            permutations: 1000,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.seeds = SeedPlan::from_master(seed);
    }
}

/// Runs the configured Shapley method on an assembled game.
pub fn attribute_game(
    game: &ShiftGame,
    mechanisms: Vec<String>,
    settings: &AttributionSettings,
) -> Result<AttributionReport> {
    let k = mechanisms.len();
    let method = settings.method.unwrap_or(if k <= settings.exact_threshold {
        Method::Exact
    } else {
        Method::Permutation
    });
    let (attributions, stderr) = match method {
        Method::Exact => (exact_shapley(game, settings.exact_threshold)?, None),
        Method::Permutation => {
            let est = permutation_shapley(game, settings.permutations, settings.seeds.permutation)?;
            (est.attributions, Some(est.stderr))
        }
    };
    let total_change = game.total_change();
    let residual = total_change - attributions.iter().sum::<f64>();
    let ws = game.weight_set();
    let max_abs_log_weight = (0..ws.n_eval())
        .flat_map(|i| ws.row(i).iter().map(|w| w.abs()))
        .fold(0.0, f64::max);
    Ok(AttributionReport {
        mechanisms,
        attributions,
        total_change,
        residual,
        stderr,
        method,
        settings: settings.clone(),
        diagnostics: Diagnostics {
            perf_source: game.perf_source(),
            perf_target: game.perf_target(),
            n_eval_source: game.n_eval_source(),
            n_eval_target: game.n_eval_target(),
            classifiers_fitted: ws.n_classifiers,
            max_abs_log_weight,
            coalitions_evaluated: game.cached_values().len(),
        },
    })
}

/// Attribution for an environment pair whose losses are already computed.
pub fn attribute_env(
    graph: &CausalGraph,
    env: &EnvironmentPair,
    settings: &AttributionSettings,
) -> Result<AttributionReport> {
    let candidates = candidate_set(graph);
    let ws = build_weight_set(
        &candidates,
        env,
        settings.split_fraction,
        &settings.estimator,
        settings.seeds.split,
        settings.seeds.estimator,
    )
    .stage(Stage::Weights)?;
    let game = make_game(&candidates, env, ws, settings.game).stage(Stage::Game)?;
    let names = candidates.mechanisms.iter().map(|m| m.label(graph)).collect();
    attribute_game(&game, names, settings).stage(Stage::Shapley)
}

/// Validates in-memory datasets against the graph, computes losses and attributes.
pub fn attribute_datasets(
    graph: &CausalGraph,
    source: TabularDataset,
    target: TabularDataset,
    metric: &MetricSpec,
    settings: &AttributionSettings,
) -> Result<AttributionReport> {
    metric.validate().stage(Stage::Validate)?;
    if source.schema() != target.schema() {
        return Err(Error::SchemaMismatch.at(Stage::Validate));
    }
    let aux = metric.auxiliary_columns();
    let variables: Vec<String> = source
        .schema()
        .iter()
        .filter(|c| !aux.contains(&c.as_str()))
        .cloned()
        .collect();
    validate_against_schema(graph, &variables).stage(Stage::Validate)?;
    let env = EnvironmentPair::with_metric(source, target, metric).stage(Stage::Loss)?;
    attribute_env(graph, &env, settings)
}

/// Reads and validates a graph document, tagging failures with the graph stage.
pub fn load_graph(graph_path: &Path) -> Result<CausalGraph> {
    let text = std::fs::read_to_string(graph_path)
        .map_err(|e| Error::Io {
            path: graph_path.to_path_buf(),
            source: e,
        })
        .stage(Stage::Graph)?;
    parse_graph(&text).stage(Stage::Graph)
}

/// Loads both CSV files and attributes with an already loaded graph.
pub fn attribute_files(
    source_path: &Path,
    target_path: &Path,
    graph: &CausalGraph,
    metric: &MetricSpec,
    settings: &AttributionSettings,
) -> Result<AttributionReport> {
    let mut required: Vec<String> = graph.columns().iter().map(|c| c.to_string()).collect();
    required.extend(metric.required_columns());
    let source = load_csv(source_path, &required).stage(Stage::Load)?;
    let target = load_csv(target_path, &required).stage(Stage::Load)?;
    attribute_datasets(graph, source, target, metric, settings)
}

/// Full pipeline from files.
pub fn attribute(
    source_path: &Path,
    target_path: &Path,
    graph_path: &Path,
    metric: &MetricSpec,
    settings: &AttributionSettings,
) -> Result<AttributionReport> {
    let graph = load_graph(graph_path)?;
    attribute_files(source_path, target_path, &graph, metric, settings)
}
