//! Simulation studies: Gaussian sweeps, the five-variable settings and the
//! estimator convergence study.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{EnvironmentPair, MetricKind, MetricSpec, TabularDataset};
use crate::error::{Error, Result};
use crate::game::make_game;
use crate::graph::{candidate_set, CausalGraph};
use crate::oracle::{
    gaussian_attr, gaussian_graph, gaussian_kl_baseline, gaussian_true_weights,
    simulate_fivevar, simulate_gaussian, Env, FiveVarParams, FiveVarShift, GaussianScenario,
};
use crate::ratio::{build_weight_set, fit_logistic, EstimatorConfig, LogisticConfig, WeightSet};
use crate::shapley::{attribute_datasets, attribute_game, AttributionReport, AttributionSettings};

/// Smallest per-environment sample size accepted by the convergence study.
pub const MIN_CONVERGENCE_N: usize = 20;

/// Derives an independent stream seed from a master seed (SplitMix64 finalizer).
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master
        .wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn map_ordered<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    #[cfg(feature = "parallel")]
    let out = items.par_iter().map(f).collect();
    #[cfg(not(feature = "parallel"))]
    let out = items.iter().map(f).collect();
    out
}

/// Source and target samples of the Gaussian scenario, `n` rows each.
pub fn gaussian_datasets(
    s: &GaussianScenario,
    n: usize,
    seed: u64,
) -> Result<(TabularDataset, TabularDataset)> {
    Ok((
        simulate_gaussian(s, n, derive_seed(seed, 0), Env::Source)?,
        simulate_gaussian(s, n, derive_seed(seed, 1), Env::Target)?,
    ))
}

/// End-to-end attribution on simulated Gaussian data.
pub fn gaussian_run(
    s: &GaussianScenario,
    n: usize,
    reversed: bool,
    settings: &AttributionSettings,
) -> Result<AttributionReport> {
    let (source, target) = gaussian_datasets(s, n, settings.seed)?;
    attribute_datasets(
        &gaussian_graph(reversed),
        source,
        target,
        &MetricSpec::precomputed("loss"),
        settings,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianSweepRow {
    pub mu2: f64,
    pub theta2: f64,
    /// Empirical attributions in graph order.
    pub empirical: Vec<f64>,
    pub mechanisms: Vec<String>,
    pub exact_x: f64,
    pub exact_y_given_x: f64,
    pub kl_x: f64,
    pub kl_y_given_x: f64,
    pub total_change: f64,
}

/// Runs [`gaussian_run`] at every `(μ₂, θ₂)` pair, in input order.
pub fn gaussian_sweep(
    base: &GaussianScenario,
    mu2: &[f64],
    theta2: &[f64],
    n: usize,
    reversed: bool,
    settings: &AttributionSettings,
) -> Result<Vec<GaussianSweepRow>> {
    let points: Vec<(f64, f64)> = mu2
        .iter()
        .flat_map(|&m| theta2.iter().map(move |&t| (m, t)))
        .collect();
    map_ordered(&points, |&(m, t)| {
        let s = base.with_target(m, t);
        let report = gaussian_run(&s, n, reversed, settings)?;
        let (ax, ay) = gaussian_attr(&s);
        let (kx, ky) = gaussian_kl_baseline(&s);
        Ok(GaussianSweepRow {
            mu2: m,
            theta2: t,
            empirical: report.attributions,
            mechanisms: report.mechanisms,
            exact_x: ax,
            exact_y_given_x: ay,
            kl_x: kx,
            kl_y_given_x: ky,
            total_change: report.total_change,
        })
    })
    .into_iter()
    .collect()
}

/// Five-variable environments scored by a logistic model on `x1, x2, x3`.
///
/// The model is trained on a separate source sample. Its predicted
/// probability is stored in column `p` of both environments.
#[derive(Debug, Clone)]
pub struct FiveVarEnvironment {
    pub graph: CausalGraph,
    pub source: TabularDataset,
    pub target: TabularDataset,
    pub metric: MetricSpec,
    /// Indices of the ground-truth shifted mechanisms in graph order.
    pub shifted: Vec<usize>,
}

pub fn fivevar_environment(
    shift: FiveVarShift,
    n: usize,
    seed: u64,
    metric: MetricKind,
) -> Result<FiveVarEnvironment> {
    let source_params = FiveVarParams {
        n,
        seed: derive_seed(seed, 0),
        ..FiveVarParams::default()
    };
    let target_params = FiveVarParams {
        seed: derive_seed(seed, 1),
        ..shift.target_params(&source_params)
    };
    let train_params = FiveVarParams {
        seed: derive_seed(seed, 2),
        ..source_params
    };
    let (source, graph) = simulate_fivevar(&source_params)?;
    let (target, _) = simulate_fivevar(&target_params)?;
    let (train, _) = simulate_fivevar(&train_params)?;

    let inputs = ["x1", "x2", "x3"].map(String::from);
    let cols = train.column_indices(&inputs)?;
    let model = fit_logistic(
        &train.feature_matrix(&cols),
        cols.len(),
        &train.column("y")?,
        &LogisticConfig::default(),
    )?;
    let score = |ds: &TabularDataset| -> Result<TabularDataset> {
        let c = ds.column_indices(&inputs)?;
        let p: Vec<f64> = (0..ds.n_rows())
            .map(|i| {
                let row = ds.row(i);
                let x: Vec<f64> = c.iter().map(|&j| row[j]).collect();
                model.predict_proba(&x)
            })
            .collect();
        ds.with_column("p", &p)
    };
    let shifted = shift
        .shifted_nodes()
        .iter()
        .map(|name| graph.nodes().iter().position(|n| n.name == *name).unwrap())
        .collect();
    Ok(FiveVarEnvironment {
        source: score(&source)?,
        target: score(&target)?,
        graph,
        metric: MetricSpec::prediction(metric, "p", "y"),
        shifted,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiveVarRun {
    pub report: AttributionReport,
    pub shifted: Vec<usize>,
    pub top: usize,
    /// Whether the top-ranked mechanism is one of the shifted ones.
    pub hit: bool,
}

/// Attribution for one five-variable setting. With `reversed`, the graph
/// has every edge flipped and `hit` compares node names instead.
pub fn fivevar_run(
    shift: FiveVarShift,
    n: usize,
    metric: MetricKind,
    reversed: bool,
    settings: &AttributionSettings,
) -> Result<FiveVarRun> {
    let env = fivevar_environment(shift, n, settings.seed, metric)?;
    let graph = if reversed { env.graph.reversed() } else { env.graph.clone() };
    let report = attribute_datasets(&graph, env.source, env.target, &env.metric, settings)?;
    let top = report.top_mechanism().unwrap_or(0);
    let top_node = &graph.nodes()[top].name;
    let hit = shift.shifted_nodes().iter().any(|s| s == top_node);
    Ok(FiveVarRun {
        report,
        shifted: env.shifted,
        top,
        hit,
    })
}

/// One repetition of the convergence study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSample {
    pub n: usize,
    pub rep: usize,
    pub mse_w_x: f64,
    pub mse_w_y_given_x: f64,
    pub attr_x: f64,
    pub attr_y_given_x: f64,
    pub sq_err_x: f64,
    pub sq_err_y_given_x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub std: f64,
    pub median: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Summary {
        let n = values.len();
        if n == 0 {
            return Summary {
                mean: f64::NAN,
                std: f64::NAN,
                median: f64::NAN,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        Summary { mean, std, median }
    }
}

/// Summary of all repetitions at one sample size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCell {
    pub n: usize,
    pub mse_w_x: Summary,
    pub mse_w_y_given_x: Summary,
    pub mse_attr_x: Summary,
    pub mse_attr_y_given_x: Summary,
    pub samples: Vec<ConvergenceSample>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceConfig {
    pub scenario: GaussianScenario,
    pub estimator: EstimatorConfig,
    pub split_fraction: f64,
}

impl Default for ConvergenceConfig {
    fn default() -> Self {
        ConvergenceConfig {
            scenario: GaussianScenario::convergence_study(),
            estimator: EstimatorConfig::default(),
            split_fraction: 0.5,
        }
    }
}

fn mse(estimate: &[f64], truth: &[f64]) -> f64 {
    estimate
        .iter()
        .zip(truth)
        .map(|(e, t)| (e - t).powi(2))
        .sum::<f64>()
        / estimate.len() as f64
}

/// Fits weights on one simulated pair with `n` rows per environment and
/// compares weights and attributions against their exact values.
pub fn convergence_sample(
    n: usize,
    rep: usize,
    seed: u64,
    config: &ConvergenceConfig,
) -> Result<ConvergenceSample> {
    if n < MIN_CONVERGENCE_N {
        return Err(Error::TooFewSamples {
            n,
            min: MIN_CONVERGENCE_N,
        });
    }
    let s = &config.scenario;
    let sample_seed = derive_seed(derive_seed(seed, n as u64), rep as u64);
    let mut settings = AttributionSettings::with_seed(sample_seed);
    settings.estimator = config.estimator;
    settings.split_fraction = config.split_fraction;

    let (source, target) = gaussian_datasets(s, n, sample_seed)?;
    let env = EnvironmentPair::with_metric(source, target, &MetricSpec::precomputed("loss"))?;
    let graph = gaussian_graph(false);
    let candidates = candidate_set(&graph);
    let ws: WeightSet = build_weight_set(
        &candidates,
        &env,
        settings.split_fraction,
        &settings.estimator,
        settings.seeds.split,
        settings.seeds.estimator,
    )?;
    let eval_rows = env
        .source
        .select_rows(&ws.source_split.as_ref().expect("split recorded").eval_indices);
    let (true_x, true_y) = gaussian_true_weights(s, &eval_rows)?;
    let est_x: Vec<f64> = ws.column(0).into_iter().map(f64::exp).collect();
    let est_y: Vec<f64> = ws.column(1).into_iter().map(f64::exp).collect();

    let game = make_game(&candidates, &env, ws, settings.game)?;
    let names = candidates.mechanisms.iter().map(|m| m.label(&graph)).collect();
    let report = attribute_game(&game, names, &settings)?;
    let (ax, ay) = gaussian_attr(s);
    Ok(ConvergenceSample {
        n,
        rep,
        mse_w_x: mse(&est_x, &true_x),
        mse_w_y_given_x: mse(&est_y, &true_y),
        attr_x: report.attributions[0],
        attr_y_given_x: report.attributions[1],
        sq_err_x: (report.attributions[0] - ax).powi(2),
        sq_err_y_given_x: (report.attributions[1] - ay).powi(2),
    })
}

/// Runs `reps` repetitions at every sample size; cells follow the order of `ns`.
pub fn convergence_study(
    ns: &[usize],
    reps: usize,
    seed: u64,
    config: &ConvergenceConfig,
) -> Result<Vec<ConvergenceCell>> {
    if reps == 0 {
        return Err(Error::InvalidParameter("reps must be positive".into()));
    }
    if let Some(&n) = ns.iter().find(|&&n| n < MIN_CONVERGENCE_N) {
        return Err(Error::TooFewSamples {
            n,
            min: MIN_CONVERGENCE_N,
        });
    }
    let jobs: Vec<(usize, usize)> = ns
        .iter()
        .flat_map(|&n| (0..reps).map(move |r| (n, r)))
        .collect();
    let samples = map_ordered(&jobs, |&(n, r)| convergence_sample(n, r, seed, config))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(samples
        .chunks(reps)
        .map(|chunk| {
            let pick = |f: fn(&ConvergenceSample) -> f64| {
                Summary::of(&chunk.iter().map(f).collect::<Vec<_>>())
            };
            ConvergenceCell {
                n: chunk[0].n,
                mse_w_x: pick(|s| s.mse_w_x),
                mse_w_y_given_x: pick(|s| s.mse_w_y_given_x),
                mse_attr_x: pick(|s| s.sq_err_x),
                mse_attr_y_given_x: pick(|s| s.sq_err_y_given_x),
                samples: chunk.to_vec(),
            }
        })
        .collect())
}
