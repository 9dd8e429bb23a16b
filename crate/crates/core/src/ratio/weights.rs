//! Per-mechanism importance weights from pairs of domain classifiers.
//!
//! For mechanism `d = P(X | pa(X))`, with `D = 1` marking target rows,
//!
//! ```text
//! w_d = [(1 - P(D=1 | pa)) / P(D=1 | pa)] · [P(D=1 | x, pa) / (1 - P(D=1 | x, pa))]
//! ```
//!
//! and for a root mechanism `P(D=1 | pa)` is the constant share of target
//! rows in the fitting data.

use std::collections::BTreeMap;
use std::sync::Arc;

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::Serialize;

use super::{EstimatorConfig, ProbClassifier};
use crate::data::{split, EnvironmentPair, SplitIndices, TabularDataset};
use crate::error::{Error, Result};
use crate::graph::{CandidateSet, Mechanism};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierRole {
    Full,
    Parent,
}

type ClassifierKey = (ClassifierRole, Vec<String>);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ParentModel {
    Classifier(Arc<ProbClassifier>),
    /// Share of target rows, `n_target / (n_source + n_target)`.
    Prior(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightModel {
    pub mechanism: Mechanism,
    full_columns: Vec<String>,
    full: Arc<ProbClassifier>,
    parent_columns: Vec<String>,
    parent: ParentModel,
    pclip: f64,
}

/// `ln w` from the two domain probabilities, each clamped to `[pclip, 1 - pclip]`.
pub fn mechanism_log_weight(p_full: f64, p_parent: f64, pclip: f64) -> f64 {
    let pf = p_full.clamp(pclip, 1.0 - pclip);
    let pp = p_parent.clamp(pclip, 1.0 - pclip);
    ((1.0 - pp) / pp).ln() + (pf / (1.0 - pf)).ln()
}

impl WeightModel {
    pub fn parent_model(&self) -> &ParentModel {
        &self.parent
    }

    pub fn pclip(&self) -> f64 {
        self.pclip
    }

    /// Domain probabilities `(P(D=1 | x, pa), P(D=1 | pa))` for each row of `ds`.
    pub fn probabilities(&self, ds: &TabularDataset) -> Result<Vec<(f64, f64)>> {
        let full_idx = ds.column_indices(&self.full_columns)?;
        let parent_idx = ds.column_indices(&self.parent_columns)?;
        let mut fx = vec![0.0; full_idx.len()];
        let mut px = vec![0.0; parent_idx.len()];
        Ok((0..ds.n_rows())
            .map(|i| {
                let row = ds.row(i);
                fx.iter_mut().zip(&full_idx).for_each(|(v, &j)| *v = row[j]);
                px.iter_mut().zip(&parent_idx).for_each(|(v, &j)| *v = row[j]);
                let p_full = self.full.predict_proba(&fx);
                let p_parent = match &self.parent {
                    ParentModel::Prior(pi) => *pi,
                    ParentModel::Classifier(c) => c.predict_proba(&px),
                };
                (p_full, p_parent)
            })
            .collect())
    }

    pub fn log_weights(&self, ds: &TabularDataset) -> Result<Vec<f64>> {
        Ok(self
            .probabilities(ds)?
            .into_iter()
            .map(|(pf, pp)| mechanism_log_weight(pf, pp, self.pclip))
            .collect())
    }
}

fn sorted(cols: &[String]) -> Vec<String> {
    let mut c = cols.to_vec();
    c.sort();
    c
}

fn fit_domain_classifier(
    columns: &[String],
    source_fit: &TabularDataset,
    target_fit: &TabularDataset,
    config: &EstimatorConfig,
    seed: u64,
) -> Result<ProbClassifier> {
    let ks = source_fit.column_indices(columns)?;
    let kt = target_fit.column_indices(columns)?;
    let mut features = source_fit.feature_matrix(&ks);
    features.extend(target_fit.feature_matrix(&kt));
    let mut labels = vec![0.0; source_fit.n_rows()];
    labels.resize(source_fit.n_rows() + target_fit.n_rows(), 1.0);
    ProbClassifier::fit(&features, columns.len(), &labels, config, seed)
}

fn classifier_keys(mech: &Mechanism) -> Vec<ClassifierKey> {
    let mut keys = vec![(ClassifierRole::Full, sorted(&mech.full_columns()))];
    if !mech.is_root() {
        keys.push((ClassifierRole::Parent, sorted(&mech.parent_columns)));
    }
    keys
}

fn check_fit_sets(source_fit: &TabularDataset, target_fit: &TabularDataset) -> Result<()> {
    if source_fit.n_rows() == 0 {
        return Err(Error::EmptyEnvironment("source"));
    }
    if target_fit.n_rows() == 0 {
        return Err(Error::EmptyEnvironment("target"));
    }
    Ok(())
}

fn fit_all(
    keys: &[ClassifierKey],
    source_fit: &TabularDataset,
    target_fit: &TabularDataset,
    config: &EstimatorConfig,
    seed: u64,
) -> Result<BTreeMap<ClassifierKey, Arc<ProbClassifier>>> {
    let fit_one = |key: &ClassifierKey| {
        fit_domain_classifier(&key.1, source_fit, target_fit, config, seed)
            .map(|c| (key.clone(), Arc::new(c)))
    };
    #[cfg(feature = "parallel")]
    let fitted: Result<Vec<_>> = keys.par_iter().map(fit_one).collect();
    #[cfg(not(feature = "parallel"))]
    let fitted: Result<Vec<_>> = keys.iter().map(fit_one).collect();
    Ok(fitted?.into_iter().collect())
}

fn assemble(
    mech: &Mechanism,
    cache: &BTreeMap<ClassifierKey, Arc<ProbClassifier>>,
    prior: f64,
    pclip: f64,
) -> WeightModel {
    let full_columns = sorted(&mech.full_columns());
    let parent_columns = sorted(&mech.parent_columns);
    let full = cache[&(ClassifierRole::Full, full_columns.clone())].clone();
    let parent = if mech.is_root() {
        ParentModel::Prior(prior)
    } else {
        ParentModel::Classifier(cache[&(ClassifierRole::Parent, parent_columns.clone())].clone())
    };
    WeightModel {
        mechanism: mech.clone(),
        full_columns,
        full,
        parent_columns,
        parent,
        pclip,
    }
}

fn target_share(source_fit: &TabularDataset, target_fit: &TabularDataset) -> f64 {
    let (ns, nt) = (source_fit.n_rows() as f64, target_fit.n_rows() as f64);
    nt / (ns + nt)
}

/// Fits the full and parent domain classifiers for one mechanism.
pub fn fit_weight_model(
    mech: &Mechanism,
    source_fit: &TabularDataset,
    target_fit: &TabularDataset,
    config: &EstimatorConfig,
    seed: u64,
) -> Result<WeightModel> {
    check_fit_sets(source_fit, target_fit)?;
    let keys = classifier_keys(mech);
    let cache = fit_all(&keys, source_fit, target_fit, config, seed)?;
    Ok(assemble(
        mech,
        &cache,
        target_share(source_fit, target_fit),
        config.pclip,
    ))
}

/// Weight models for every mechanism plus their log weights on the source
/// evaluation split.
#[derive(Debug, Clone)]
pub struct WeightSet {
    pub names: Vec<String>,
    pub models: Vec<WeightModel>,
    n_eval: usize,
    /// Row-major `n_eval × k` matrix of `ln w_d`.
    log_weights: Vec<f64>,
    pub source_split: Option<SplitIndices>,
    pub target_split: Option<SplitIndices>,
    pub n_classifiers: usize,
}

impl WeightSet {
    /// Wraps externally computed log weights, e.g. exact analytic ones.
    pub fn from_log_weights(names: Vec<String>, n_eval: usize, log_weights: Vec<f64>) -> Result<Self> {
        if log_weights.len() != n_eval * names.len() {
            return Err(Error::InvalidWeights(format!(
                "{} log weights for {n_eval} rows × {} mechanisms",
                log_weights.len(),
                names.len()
            )));
        }
        if log_weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvalidWeights("log weights must be finite".into()));
        }
        Ok(WeightSet {
            names,
            models: Vec::new(),
            n_eval,
            log_weights,
            source_split: None,
            target_split: None,
            n_classifiers: 0,
        })
    }

    /// Builds from per-mechanism columns of log weights.
    pub fn from_columns(names: Vec<String>, columns: &[Vec<f64>]) -> Result<Self> {
        let n_eval = columns.first().map_or(0, Vec::len);
        if columns.len() != names.len() || columns.iter().any(|c| c.len() != n_eval) {
            return Err(Error::InvalidWeights("ragged log-weight columns".into()));
        }
        let data = (0..n_eval)
            .flat_map(|i| columns.iter().map(move |c| c[i]))
            .collect();
        Self::from_log_weights(names, n_eval, data)
    }

    pub fn n_mechanisms(&self) -> usize {
        self.names.len()
    }

    pub fn n_eval(&self) -> usize {
        self.n_eval
    }

    pub fn log_weight(&self, row: usize, mech: usize) -> f64 {
        self.log_weights[row * self.names.len() + mech]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let k = self.names.len();
        &self.log_weights[row * k..(row + 1) * k]
    }

    pub fn column(&self, mech: usize) -> Vec<f64> {
        (0..self.n_eval).map(|i| self.log_weight(i, mech)).collect()
    }
}

/// Splits both environments, fits every weight model on the fit parts and
/// evaluates log weights on the source evaluation part.
///
/// Classifiers are cached by role and column set, so mechanisms with the same
/// parents share one parent classifier.
pub fn build_weight_set(
    candidates: &CandidateSet,
    env: &EnvironmentPair,
    split_fraction: f64,
    config: &EstimatorConfig,
    split_seed: u64,
    estimator_seed: u64,
) -> Result<WeightSet> {
    let ss = split(env.source.n_rows(), split_fraction, split_seed)?;
    let ts = split(env.target.n_rows(), split_fraction, split_seed)?;
    let source_fit = env.source.select_rows(&ss.fit_indices);
    let target_fit = env.target.select_rows(&ts.fit_indices);
    let source_eval = env.source.select_rows(&ss.eval_indices);
    check_fit_sets(&source_fit, &target_fit)?;

    let mut keys: Vec<ClassifierKey> = Vec::new();
    for mech in &candidates.mechanisms {
        for key in classifier_keys(mech) {
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
    }
    let cache = fit_all(&keys, &source_fit, &target_fit, config, estimator_seed)?;
    let prior = target_share(&source_fit, &target_fit);
    let models: Vec<WeightModel> = candidates
        .mechanisms
        .iter()
        .map(|m| assemble(m, &cache, prior, config.pclip))
        .collect();

    let columns = models
        .iter()
        .map(|m| m.log_weights(&source_eval))
        .collect::<Result<Vec<_>>>()?;
    let mut ws = WeightSet::from_columns(candidates.names(), &columns)?;
    ws.models = models;
    ws.source_split = Some(ss);
    ws.target_split = Some(ts);
    ws.n_classifiers = cache.len();
    Ok(ws)
}
