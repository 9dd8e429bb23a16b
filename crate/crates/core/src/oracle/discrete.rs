//! Finite-support SCMs where every coalition value is computed by enumeration.
//!
//! Configurations are ordered in mixed radix with the first node most
//! significant. Each CPT has one row per parent configuration, again in mixed
//! radix over the parents in their listed order, and one column per value of
//! the node's support.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Normalization, TabularDataset};
use crate::error::{Error, Result};
use crate::game::{Coalition, GameSettings, ShiftGame, TableGame, ValueFunction};
use crate::graph::{CausalGraph, NodeSpec};
use crate::ratio::WeightSet;
use crate::shapley::exact_shapley;

/// Largest number of joint configurations that will be enumerated.
pub const MAX_CONFIGURATIONS: usize = 1_000_000;

const ROW_SUM_TOL: f64 = 1e-12;

/// Log weight used where the target probability is zero and the source is not.
pub const ZERO_RATIO_LOG_WEIGHT: f64 = -708.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteNode {
    pub name: String,
    pub support: Vec<f64>,
    #[serde(default)]
    pub parents: Vec<String>,
    pub cpt_source: Vec<Vec<f64>>,
    pub cpt_target: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteScm {
    pub nodes: Vec<DiscreteNode>,
    /// Loss of the fixed model at each configuration.
    pub loss: Vec<f64>,
}

#[derive(Debug, Clone)]
struct Layout {
    parents: Vec<Vec<usize>>,
    radix: Vec<usize>,
    n_configs: usize,
}

impl DiscreteScm {
    pub fn new(nodes: Vec<DiscreteNode>, loss: Vec<f64>) -> Result<Self> {
        let scm = DiscreteScm { nodes, loss };
        scm.layout()?;
        Ok(scm)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let scm: DiscreteScm =
            serde_json::from_str(text).map_err(|e| Error::InvalidScm(e.to_string()))?;
        scm.layout()?;
        Ok(scm)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scm serializes")
    }

    /// One node per variable; each node owns a single column of the same name.
    pub fn graph(&self) -> Result<CausalGraph> {
        let specs = self
            .nodes
            .iter()
            .map(|n| NodeSpec {
                name: n.name.clone(),
                columns: vec![n.name.clone()],
                parents: n.parents.clone(),
            })
            .collect();
        CausalGraph::new(specs)
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_configs(&self) -> Result<usize> {
        Ok(self.layout()?.n_configs)
    }

    fn layout(&self) -> Result<Layout> {
        self.graph().map_err(|e| Error::InvalidScm(e.to_string()))?;
        let index = |name: &str| self.nodes.iter().position(|n| n.name == name).unwrap();
        let parents: Vec<Vec<usize>> = self
            .nodes
            .iter()
            .map(|n| n.parents.iter().map(|p| index(p)).collect())
            .collect();
        let radix: Vec<usize> = self.nodes.iter().map(|n| n.support.len()).collect();
        let mut n_configs: usize = 1;
        for (node, &r) in self.nodes.iter().zip(&radix) {
            if r == 0 {
                return Err(Error::InvalidScm(format!("node {} has empty support", node.name)));
            }
            if node.support.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidScm(format!("node {} has a non-finite value", node.name)));
            }
            let mut sorted = node.support.clone();
            sorted.sort_by(f64::total_cmp);
            if sorted.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidScm(format!("node {} repeats a value", node.name)));
            }
            n_configs = n_configs
                .checked_mul(r)
                .filter(|&n| n <= MAX_CONFIGURATIONS)
                .ok_or(Error::SupportTooLarge(MAX_CONFIGURATIONS))?;
        }
        for (i, node) in self.nodes.iter().enumerate() {
            let rows: usize = parents[i].iter().map(|&p| radix[p]).product();
            for (which, cpt) in [("cpt_source", &node.cpt_source), ("cpt_target", &node.cpt_target)] {
                if cpt.len() != rows {
                    return Err(Error::InvalidScm(format!(
                        "node {}: {which} has {} rows, expected {rows}",
                        node.name,
                        cpt.len()
                    )));
                }
                for (r, row) in cpt.iter().enumerate() {
                    if row.len() != radix[i] {
                        return Err(Error::InvalidScm(format!(
                            "node {}: {which} row {r} has {} entries, expected {}",
                            node.name,
                            row.len(),
                            radix[i]
                        )));
                    }
                    if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                        return Err(Error::InvalidScm(format!(
                            "node {}: {which} row {r} has an invalid probability",
                            node.name
                        )));
                    }
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > ROW_SUM_TOL {
                        return Err(Error::InvalidScm(format!(
                            "node {}: {which} row {r} sums to {sum}",
                            node.name
                        )));
                    }
                }
            }
            for (r, (ps, pt)) in node.cpt_source.iter().zip(&node.cpt_target).enumerate() {
                if ps.iter().zip(pt).any(|(s, t)| *s == 0.0 && *t > 0.0) {
                    return Err(Error::InvalidScm(format!(
                        "node {}: row {r} has target mass outside the source support",
                        node.name
                    )));
                }
            }
        }
        if self.loss.len() != n_configs {
            return Err(Error::InvalidScm(format!(
                "loss has {} entries, expected {n_configs}",
                self.loss.len()
            )));
        }
        if self.loss.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidScm("loss values must be finite".into()));
        }
        Ok(Layout {
            parents,
            radix,
            n_configs,
        })
    }

    /// Visits every configuration as `(index, digits)` in mixed-radix order.
    fn for_each_config(layout: &Layout, mut f: impl FnMut(usize, &[usize])) {
        let k = layout.radix.len();
        let mut digits = vec![0usize; k];
        for idx in 0..layout.n_configs {
            f(idx, &digits);
            for d in (0..k).rev() {
                digits[d] += 1;
                if digits[d] < layout.radix[d] {
                    break;
                }
                digits[d] = 0;
            }
        }
    }

    fn cpt_row(layout: &Layout, node: usize, digits: &[usize]) -> usize {
        layout.parents[node]
            .iter()
            .fold(0, |row, &p| row * layout.radix[p] + digits[p])
    }

    /// Probability of each configuration when the mechanisms in `c` take
    /// their target CPT and the rest keep the source CPT.
    pub fn joint_pmf(&self, c: Coalition) -> Result<Vec<f64>> {
        let layout = self.layout()?;
        let mut pmf = vec![0.0; layout.n_configs];
        Self::for_each_config(&layout, |idx, digits| {
            let mut p = 1.0;
            for (i, node) in self.nodes.iter().enumerate() {
                let cpt = if c.contains(i) { &node.cpt_target } else { &node.cpt_source };
                p *= cpt[Self::cpt_row(&layout, i, digits)][digits[i]];
            }
            pmf[idx] = p;
        });
        Ok(pmf)
    }

    /// Values of each node at configuration `idx`.
    pub fn config_values(&self, idx: usize) -> Vec<f64> {
        let mut rest = idx;
        let mut out = vec![0.0; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate().rev() {
            let r = node.support.len();
            out[i] = node.support[rest % r];
            rest /= r;
        }
        out
    }

    /// Per-node log density ratios `ln(p_target / p_source)` at each configuration.
    fn log_ratios(&self, layout: &Layout) -> Vec<Vec<f64>> {
        let k = self.nodes.len();
        let mut out = vec![vec![0.0; k]; layout.n_configs];
        Self::for_each_config(layout, |idx, digits| {
            for (i, node) in self.nodes.iter().enumerate() {
                let row = Self::cpt_row(layout, i, digits);
                let (s, t) = (node.cpt_source[row][digits[i]], node.cpt_target[row][digits[i]]);
                out[idx][i] = if s == 0.0 {
                    0.0
                } else if t == 0.0 {
                    ZERO_RATIO_LOG_WEIGHT
                } else {
                    (t / s).ln()
                };
            }
        });
        out
    }
}

/// Joint pmf of the coalition distribution and its value
/// `E_coalition[ℓ] − E_source[ℓ]`.
pub fn enumerate_discrete(scm: &DiscreteScm, c: Coalition) -> Result<(Vec<f64>, f64)> {
    let pmf = scm.joint_pmf(c)?;
    let src = scm.joint_pmf(Coalition::EMPTY)?;
    let mixed: f64 = pmf.iter().zip(&scm.loss).map(|(p, l)| p * l).sum();
    let base: f64 = src.iter().zip(&scm.loss).map(|(p, l)| p * l).sum();
    Ok((pmf, mixed - base))
}

/// Exact coalition values in bitmask order.
pub fn discrete_values(scm: &DiscreteScm) -> Result<TableGame> {
    let k = scm.n_nodes();
    let src = scm.joint_pmf(Coalition::EMPTY)?;
    let base: f64 = src.iter().zip(&scm.loss).map(|(p, l)| p * l).sum();
    let mut values = Vec::with_capacity(1 << k);
    for bits in 0..1u64 << k {
        let pmf = scm.joint_pmf(Coalition::from_bits(bits))?;
        let v: f64 = pmf.iter().zip(&scm.loss).map(|(p, l)| p * l).sum();
        values.push(if bits == 0 { 0.0 } else { v - base });
    }
    TableGame::new(k, values)
}

/// Exact Shapley attributions of the SCM's mechanisms.
pub fn discrete_attributions(scm: &DiscreteScm) -> Result<Vec<f64>> {
    let table = discrete_values(scm)?;
    exact_shapley(&table, table.n_players())
}

/// The whole source support used as an evaluation sample.
///
/// Each configuration with positive source mass is one row. Losses are
/// rescaled to `N·p(v)·ℓ(v)`, so the plain sample mean of any reweighted loss
/// equals the corresponding population expectation.
#[derive(Debug, Clone)]
pub struct Population {
    pub rows: TabularDataset,
    pub source_losses: Vec<f64>,
    pub target_losses: Vec<f64>,
    pub weights: WeightSet,
}

impl Population {
    pub fn build(scm: &DiscreteScm) -> Result<Self> {
        let layout = scm.layout()?;
        let src = scm.joint_pmf(Coalition::EMPTY)?;
        let tgt = scm.joint_pmf(Coalition::full(scm.n_nodes()))?;
        let ratios = scm.log_ratios(&layout);
        let keep: Vec<usize> = (0..layout.n_configs).filter(|&i| src[i] > 0.0).collect();
        let n = keep.len() as f64;
        let schema = scm.nodes.iter().map(|n| n.name.clone()).collect();
        let rows: Vec<Vec<f64>> = keep.iter().map(|&i| scm.config_values(i)).collect();
        let source_losses = keep.iter().map(|&i| n * src[i] * scm.loss[i]).collect();
        let target_losses = keep.iter().map(|&i| n * tgt[i] * scm.loss[i]).collect();
        let log_weights = keep.iter().flat_map(|&i| ratios[i].iter().copied()).collect();
        let names = scm.nodes.iter().map(|n| n.name.clone()).collect();
        Ok(Population {
            rows: TabularDataset::from_rows(schema, &rows)?,
            source_losses,
            target_losses,
            weights: WeightSet::from_log_weights(names, keep.len(), log_weights)?,
        })
    }

    /// Coalition game over the population with exact weights and plain averaging.
    pub fn game(self) -> Result<ShiftGame> {
        let settings = GameSettings {
            normalization: Normalization::Plain,
            ..GameSettings::default()
        };
        ShiftGame::new(self.weights, self.source_losses, self.target_losses, settings)
    }
}

/// Random SCM over binary-to-`max_card` supports with strictly positive CPTs.
pub fn random_scm(seed: u64, n_nodes: usize, max_card: usize, max_parents: usize) -> DiscreteScm {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_card = max_card.max(2);
    let mut nodes: Vec<DiscreteNode> = Vec::with_capacity(n_nodes);
    let random_row = |rng: &mut ChaCha8Rng, r: usize| {
        let raw: Vec<f64> = (0..r).map(|_| rng.random_range(0.05..1.0)).collect();
        let sum: f64 = raw.iter().sum();
        let mut row: Vec<f64> = raw.iter().map(|v| v / sum).collect();
        let head: f64 = row[..r - 1].iter().sum();
        row[r - 1] = 1.0 - head;
        row
    };
    for i in 0..n_nodes {
        let card = rng.random_range(2..=max_card);
        let mut parents = Vec::new();
        for j in 0..i {
            if parents.len() < max_parents && rng.random_bool(0.5) {
                parents.push(j);
            }
        }
        let rows: usize = parents.iter().map(|&p| nodes[p].support.len()).product();
        let cpt_source = (0..rows).map(|_| random_row(&mut rng, card)).collect();
        let cpt_target = (0..rows).map(|_| random_row(&mut rng, card)).collect();
        nodes.push(DiscreteNode {
            name: format!("V{i}"),
            support: (0..card).map(|v| v as f64).collect(),
            parents: parents.iter().map(|&p| format!("V{p}")).collect(),
            cpt_source,
            cpt_target,
        });
    }
    let n_configs: usize = nodes.iter().map(|n| n.support.len()).product();
    let loss = (0..n_configs).map(|_| rng.random_range(0.0..1.0)).collect();
    DiscreteScm { nodes, loss }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `X → Y` with `ŷ = x` under 0/1 loss; source error 0.15, target error 0.12.
    fn binary_example() -> DiscreteScm {
        let x = DiscreteNode {
            name: "X".into(),
            support: vec![0.0, 1.0],
            parents: vec![],
            cpt_source: vec![vec![0.5, 0.5]],
            cpt_target: vec![vec![0.8, 0.2]],
        };
        let y = DiscreteNode {
            name: "Y".into(),
            support: vec![0.0, 1.0],
            parents: vec!["X".into()],
            cpt_source: vec![vec![0.9, 0.1], vec![0.2, 0.8]],
            cpt_target: vec![vec![0.9, 0.1], vec![0.2, 0.8]],
        };
        // configurations (x, y): 00, 01, 10, 11
        DiscreteScm::new(vec![x, y], vec![0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    #[test]
    fn binary_example_values() {
        let scm = binary_example();
        let (pmf, val) = enumerate_discrete(&scm, Coalition::singleton(0)).unwrap();
        assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        let src_err: f64 = scm
            .joint_pmf(Coalition::EMPTY)
            .unwrap()
            .iter()
            .zip(&scm.loss)
            .map(|(p, l)| p * l)
            .sum();
        assert!((src_err - 0.15).abs() < 1e-15);
        assert!((val + 0.03).abs() < 1e-15);
        let attr = discrete_attributions(&scm).unwrap();
        assert!((attr[0] + 0.03).abs() < 1e-15);
        assert!(attr[1].abs() < 1e-15);
    }

    #[test]
    fn identity_coalitions() {
        let scm = random_scm(4, 4, 3, 2);
        let table = discrete_values(&scm).unwrap();
        assert_eq!(table.value(Coalition::EMPTY), 0.0);
        let src = scm.joint_pmf(Coalition::EMPTY).unwrap();
        let tgt = scm.joint_pmf(Coalition::full(4)).unwrap();
        let delta: f64 = tgt.iter().zip(&src).zip(&scm.loss).map(|((t, s), l)| (t - s) * l).sum();
        assert!((table.value(Coalition::full(4)) - delta).abs() < 1e-12);
    }

    #[test]
    fn population_matches_enumeration() {
        let scm = random_scm(9, 4, 3, 2);
        let table = discrete_values(&scm).unwrap();
        let game = Population::build(&scm).unwrap().game().unwrap();
        for bits in 0..16u64 {
            let c = Coalition::from_bits(bits);
            assert!((game.value(c) - table.value(c)).abs() < 1e-12, "{c}");
        }
    }

    #[test]
    fn config_order_is_mixed_radix() {
        let mut scm = binary_example();
        scm.nodes[0].support = vec![10.0, 20.0];
        assert_eq!(scm.config_values(0), vec![10.0, 0.0]);
        assert_eq!(scm.config_values(1), vec![10.0, 1.0]);
        assert_eq!(scm.config_values(2), vec![20.0, 0.0]);
        let pmf = scm.joint_pmf(Coalition::EMPTY).unwrap();
        assert!((pmf[1] - 0.05).abs() < 1e-15);
        assert!((pmf[2] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn validation_errors() {
        let good = binary_example();
        let mut bad = good.clone();
        bad.nodes[1].cpt_source[0] = vec![0.5, 0.6];
        assert!(matches!(bad.n_configs(), Err(Error::InvalidScm(_))));
        let mut bad = good.clone();
        bad.nodes[0].cpt_source = vec![vec![1.0, 0.0]];
        assert!(matches!(bad.n_configs(), Err(Error::InvalidScm(_))));
        let mut bad = good.clone();
        bad.loss.pop();
        assert!(matches!(bad.n_configs(), Err(Error::InvalidScm(_))));
        let mut bad = good.clone();
        bad.nodes[0].parents = vec!["Y".into()];
        assert!(matches!(bad.n_configs(), Err(Error::InvalidScm(_))));
        let big = DiscreteNode {
            name: "A".into(),
            support: (0..1001).map(|v| v as f64).collect(),
            parents: vec![],
            cpt_source: vec![vec![1.0 / 1001.0; 1001]],
            cpt_target: vec![vec![1.0 / 1001.0; 1001]],
        };
        let mut b2 = big.clone();
        b2.name = "B".into();
        assert!(matches!(DiscreteScm::new(vec![big, b2], vec![]), Err(Error::SupportTooLarge(_))));
    }

    #[test]
    fn json_round_trip() {
        let scm = binary_example();
        assert_eq!(DiscreteScm::from_json(&scm.to_json()).unwrap(), scm);
        assert!(DiscreteScm::from_json("{").is_err());
    }
}
