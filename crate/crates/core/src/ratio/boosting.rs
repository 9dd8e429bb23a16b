//! Histogram gradient boosting of shallow regression trees on the logistic loss.
//!
//! Features are quantized once into at most `max_bins` bins per column. Trees
//! are grown level by level with second-order (Newton) gains and leaf values,
//! as in XGBoost with `lambda` L2 regularization on leaf weights.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::logistic::{check_classifier_inputs, sigmoid};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostConfig {
    pub trees: usize,
    pub depth: usize,
    pub rate: f64,
    /// L2 penalty on leaf values.
    pub lambda: f64,
    /// Minimum hessian mass in each child of a split.
    pub min_child_weight: f64,
    pub max_bins: usize,
    /// Fraction of rows drawn (without replacement) for each tree.
    pub subsample: f64,
}

impl Default for BoostConfig {
    fn default() -> Self {
        BoostConfig {
            trees: 100,
            depth: 3,
            rate: 0.1,
            lambda: 1.0,
            min_child_weight: 1.0,
            max_bins: 255,
            subsample: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf(v) => return *v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoostedTrees {
    n_features: usize,
    base_logit: f64,
    rate: f64,
    trees: Vec<Tree>,
}

/// Per-feature cut points; value `v` falls in bin `b` iff
/// `cuts[b-1] < v <= cuts[b]`.
struct Binned {
    cuts: Vec<Vec<f64>>,
    /// Column-major bin ids.
    bins: Vec<Vec<u8>>,
}

fn bin_features(features: &[f64], n: usize, k: usize, max_bins: usize) -> Binned {
    let mut cuts = Vec::with_capacity(k);
    let mut bins = Vec::with_capacity(k);
    for j in 0..k {
        let mut col: Vec<f64> = (0..n).map(|i| features[i * k + j]).collect();
        col.sort_by(f64::total_cmp);
        let mut uniq = col.clone();
        uniq.dedup();
        let c: Vec<f64> = if uniq.len() <= max_bins {
            uniq.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
        } else {
            let mut c: Vec<f64> = (1..max_bins)
                .map(|b| col[(b * n) / max_bins])
                .collect();
            c.dedup();
            // the top bin must be non-empty
            while c.last().is_some_and(|&last| last >= *uniq.last().unwrap()) {
                c.pop();
            }
            c
        };
        let b: Vec<u8> = (0..n)
            .map(|i| c.partition_point(|&cut| cut < features[i * k + j]) as u8)
            .collect();
        cuts.push(c);
        bins.push(b);
    }
    Binned { cuts, bins }
}

struct Candidate {
    gain: f64,
    feature: usize,
    bin: usize,
}

fn leaf_value(g: f64, h: f64, lambda: f64) -> f64 {
    -g / (h + lambda)
}

fn score(g: f64, h: f64, lambda: f64) -> f64 {
    g * g / (h + lambda)
}

fn best_split(
    rows: &[usize],
    binned: &Binned,
    grad: &[f64],
    hess: &[f64],
    cfg: &BoostConfig,
) -> Option<Candidate> {
    let g_tot: f64 = rows.iter().map(|&i| grad[i]).sum();
    let h_tot: f64 = rows.iter().map(|&i| hess[i]).sum();
    let parent = score(g_tot, h_tot, cfg.lambda);
    let mut best: Option<Candidate> = None;
    for (f, cuts) in binned.cuts.iter().enumerate() {
        if cuts.is_empty() {
            continue;
        }
        let nb = cuts.len() + 1;
        let mut hg = vec![0.0; nb];
        let mut hh = vec![0.0; nb];
        let col = &binned.bins[f];
        for &i in rows {
            let b = col[i] as usize;
            hg[b] += grad[i];
            hh[b] += hess[i];
        }
        let (mut gl, mut hl) = (0.0, 0.0);
        for b in 0..nb - 1 {
            gl += hg[b];
            hl += hh[b];
            let (gr, hr) = (g_tot - gl, h_tot - hl);
            if hl < cfg.min_child_weight || hr < cfg.min_child_weight {
                continue;
            }
            let gain = 0.5 * (score(gl, hl, cfg.lambda) + score(gr, hr, cfg.lambda) - parent);
            if gain > 1e-12 && best.as_ref().is_none_or(|c| gain > c.gain) {
                best = Some(Candidate {
                    gain,
                    feature: f,
                    bin: b,
                });
            }
        }
    }
    best
}

fn grow_tree(
    rows: Vec<usize>,
    binned: &Binned,
    grad: &[f64],
    hess: &[f64],
    cfg: &BoostConfig,
) -> Tree {
    let mut nodes = Vec::new();
    // (node slot, rows, depth)
    let mut frontier = vec![(0usize, rows, 0usize)];
    nodes.push(Node::Leaf(0.0));
    while let Some((slot, rows, depth)) = frontier.pop() {
        let split = if depth < cfg.depth {
            best_split(&rows, binned, grad, hess, cfg)
        } else {
            None
        };
        match split {
            Some(c) => {
                let col = &binned.bins[c.feature];
                let (l, r): (Vec<usize>, Vec<usize>) =
                    rows.iter().partition(|&&i| (col[i] as usize) <= c.bin);
                let left = nodes.len();
                nodes.push(Node::Leaf(0.0));
                nodes.push(Node::Leaf(0.0));
                nodes[slot] = Node::Split {
                    feature: c.feature,
                    threshold: binned.cuts[c.feature][c.bin],
                    left,
                    right: left + 1,
                };
                frontier.push((left + 1, r, depth + 1));
                frontier.push((left, l, depth + 1));
            }
            None => {
                let g: f64 = rows.iter().map(|&i| grad[i]).sum();
                let h: f64 = rows.iter().map(|&i| hess[i]).sum();
                nodes[slot] = Node::Leaf(leaf_value(g, h, cfg.lambda));
            }
        }
    }
    Tree { nodes }
}

/// Fits a boosted ensemble for `P(label = 1 | x)` on row-major `features`
/// with `k` columns.
pub fn fit_boosted_stumps(
    features: &[f64],
    k: usize,
    labels: &[f64],
    cfg: &BoostConfig,
    seed: u64,
) -> Result<BoostedTrees> {
    if cfg.depth > 3 {
        return Err(Error::InvalidParameter(format!("tree depth {} exceeds 3", cfg.depth)));
    }
    let valid_subsample = cfg.subsample > 0.0 && cfg.subsample <= 1.0;
    if cfg.rate.is_nan() || cfg.rate <= 0.0 || !valid_subsample {
        return Err(Error::InvalidParameter("rate and subsample must be positive".into()));
    }
    let max_bins = cfg.max_bins.clamp(2, 256);
    let n = check_classifier_inputs(features, k, labels, 10)?;
    let binned = bin_features(features, n, k, max_bins);

    let prior = labels.iter().sum::<f64>() / n as f64;
    let base_logit = (prior / (1.0 - prior)).ln();
    let mut margin = vec![base_logit; n];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trees = Vec::with_capacity(cfg.trees);

    for _ in 0..cfg.trees {
        for i in 0..n {
            let p = sigmoid(margin[i]);
            grad[i] = p - labels[i];
            hess[i] = p * (1.0 - p);
        }
        let rows: Vec<usize> = if cfg.subsample < 1.0 {
            (0..n).filter(|_| rng.random_bool(cfg.subsample)).collect()
        } else {
            (0..n).collect()
        };
        let tree = grow_tree(rows, &binned, &grad, &hess, cfg);
        for (i, m) in margin.iter_mut().enumerate() {
            *m += cfg.rate * tree.predict(&features[i * k..(i + 1) * k]);
        }
        trees.push(tree);
    }

    Ok(BoostedTrees {
        n_features: k,
        base_logit,
        rate: cfg.rate,
        trees,
    })
}

impl BoostedTrees {
    pub fn input_dim(&self) -> usize {
        self.n_features
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn base_logit(&self) -> f64 {
        self.base_logit
    }

    /// Features used by at least one split.
    pub fn split_features(&self) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .trees
            .iter()
            .flat_map(|t| t.nodes.iter())
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf(_) => None,
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn predict_logit(&self, x: &[f64]) -> f64 {
        self.base_logit + self.rate * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.predict_logit(x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::logistic::{fit_logistic, LogisticConfig};
    use rand_distr::{Distribution, Normal};

    fn mean_log_loss(p: impl Fn(&[f64]) -> f64, x: &[f64], y: &[f64], k: usize) -> f64 {
        x.chunks_exact(k)
            .zip(y)
            .map(|(row, &label)| {
                let q = p(row).clamp(1e-12, 1.0 - 1e-12);
                -(label * q.ln() + (1.0 - label) * (1.0 - q).ln())
            })
            .sum::<f64>()
            / y.len() as f64
    }

    #[test]
    fn xor_beats_linear_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let noise = Normal::new(0.0, 0.3).unwrap();
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..800 {
            let a = (i % 2) as f64;
            let b = ((i / 2) % 2) as f64;
            x.push(a + noise.sample(&mut rng));
            x.push(b + noise.sample(&mut rng));
            y.push(if a != b { 1.0 } else { 0.0 });
        }
        let gbt = fit_boosted_stumps(&x, 2, &y, &BoostConfig::default(), 0).unwrap();
        let lr = fit_logistic(&x, 2, &y, &LogisticConfig::default()).unwrap();
        let gbt_loss = mean_log_loss(|r| gbt.predict_proba(r), &x, &y, 2);
        let lr_loss = mean_log_loss(|r| lr.predict_proba(r), &x, &y, 2);
        assert!(gbt_loss < lr_loss, "{gbt_loss} vs {lr_loss}");
        assert!(lr_loss > 0.68);
    }

    #[test]
    fn constant_feature_never_split() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..200 {
            x.push(5.0);
            x.push(rng.random_range(0.0..1.0) + (i % 2) as f64 * 0.5);
            y.push((i % 2) as f64);
        }
        let m = fit_boosted_stumps(&x, 2, &y, &BoostConfig::default(), 0).unwrap();
        assert_eq!(m.split_features(), vec![1]);

        // only the constant column: every tree is a zero leaf
        let xc: Vec<f64> = vec![5.0; 200];
        let m = fit_boosted_stumps(&xc, 1, &y, &BoostConfig::default(), 0).unwrap();
        assert!(m.split_features().is_empty());
        assert!((m.predict_logit(&[5.0]) - m.base_logit()).abs() < 1e-12);
    }

    #[test]
    fn empty_ensemble_predicts_prior() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y: Vec<f64> = (0..20).map(|i| if i < 5 { 1.0 } else { 0.0 }).collect();
        let cfg = BoostConfig {
            trees: 0,
            ..Default::default()
        };
        let m = fit_boosted_stumps(&x, 1, &y, &cfg, 0).unwrap();
        assert!((m.predict_proba(&[3.0]) - 0.25).abs() < 1e-12);
        assert_eq!(m.n_trees(), 0);
    }

    #[test]
    fn seeded_determinism() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x: Vec<f64> = (0..300).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = x.iter().map(|&v| if v + rng.random_range(-0.5..0.5) > 0.0 { 1.0 } else { 0.0 }).collect();
        let cfg = BoostConfig {
            subsample: 0.7,
            ..Default::default()
        };
        let a = fit_boosted_stumps(&x, 1, &y, &cfg, 42).unwrap();
        let b = fit_boosted_stumps(&x, 1, &y, &cfg, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn binning_respects_thresholds() {
        // many distinct values force quantile cuts
        let n = 2000;
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sqrt()).collect();
        let b = bin_features(&x, n, 1, 16);
        assert!(b.cuts[0].len() <= 15);
        for (&xi, &bin) in x.iter().zip(&b.bins[0]) {
            let bin = bin as usize;
            if bin > 0 {
                assert!(xi > b.cuts[0][bin - 1]);
            }
            if bin < b.cuts[0].len() {
                assert!(xi <= b.cuts[0][bin]);
            }
        }
    }

    #[test]
    fn rejects_deep_trees_and_single_class() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let cfg = BoostConfig {
            depth: 4,
            ..Default::default()
        };
        let y: Vec<f64> = (0..20).map(|i| (i % 2) as f64).collect();
        assert!(fit_boosted_stumps(&x, 1, &y, &cfg, 0).is_err());
        let ones = vec![1.0; 20];
        assert!(matches!(
            fit_boosted_stumps(&x, 1, &ones, &BoostConfig::default(), 0),
            Err(Error::SingleClass)
        ));
        assert!(matches!(
            fit_boosted_stumps(&x[..5], 1, &y[..5], &BoostConfig::default(), 0),
            Err(Error::TooFewSamples { .. })
        ));
    }
}
