//! Five-variable generator with a group variable outside the model inputs.
//!
//! `G ~ Ber(0.5)`, `Y = ξ_q(G)`, `X₁ = N(ω ξ(Y), 1)`, `X₂ = N(ξ(Y) + G, 1)`,
//! `X₃ = N(ξ(Y) + μG, 1)`, where `ξ_p` flips a bit with probability `p` and
//! each unlabelled `ξ` is an independent `ξ_{0.25}`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::TabularDataset;
use crate::error::{Error, Result};
use crate::graph::{CausalGraph, NodeSpec};

const NOISE_FLIP: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveVarParams {
    pub q: f64,
    pub omega: f64,
    pub mu: f64,
    pub n: usize,
    pub seed: u64,
}

impl Default for FiveVarParams {
    fn default() -> Self {
        FiveVarParams {
            q: 0.9,
            omega: 1.0,
            mu: 3.0,
            n: 20_000,
            seed: 0,
        }
    }
}

impl FiveVarParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.q) {
            return Err(Error::InvalidParameter(format!("q = {} is outside [0, 1]", self.q)));
        }
        if !self.omega.is_finite() || !self.mu.is_finite() {
            return Err(Error::InvalidParameter("omega and mu must be finite".into()));
        }
        if self.n == 0 {
            return Err(Error::InvalidParameter("n must be positive".into()));
        }
        Ok(())
    }
}

/// The four target settings. Each carries the value it varies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "setting", content = "value")]
pub enum FiveVarShift {
    /// (a) `q` changes: only `P(Y|G)` moves.
    Label(f64),
    /// (b) `μ` changes: only `P(X₃|G,Y)` moves.
    Group(f64),
    /// (c) `ω = 0` and `q` changes: `P(Y|G)` and `P(X₁|Y)` move.
    LabelAndX1(f64),
    /// (d) `μ = −1` and `q` changes: `P(Y|G)` and `P(X₃|G,Y)` move.
    LabelAndX3(f64),
}

impl FiveVarShift {
    pub fn target_params(&self, source: &FiveVarParams) -> FiveVarParams {
        let p = *source;
        match *self {
            FiveVarShift::Label(q) => FiveVarParams { q, ..p },
            FiveVarShift::Group(mu) => FiveVarParams { mu, ..p },
            FiveVarShift::LabelAndX1(q) => FiveVarParams { q, omega: 0.0, ..p },
            FiveVarShift::LabelAndX3(q) => FiveVarParams { q, mu: -1.0, ..p },
        }
    }

    /// Nodes whose mechanisms the shift changes, in graph order.
    pub fn shifted_nodes(&self) -> &'static [&'static str] {
        match self {
            FiveVarShift::Label(_) => &["Y"],
            FiveVarShift::Group(_) => &["X3"],
            FiveVarShift::LabelAndX1(_) => &["Y", "X1"],
            FiveVarShift::LabelAndX3(_) => &["Y", "X3"],
        }
    }

    pub fn letter(&self) -> char {
        match self {
            FiveVarShift::Label(_) => 'a',
            FiveVarShift::Group(_) => 'b',
            FiveVarShift::LabelAndX1(_) => 'c',
            FiveVarShift::LabelAndX3(_) => 'd',
        }
    }
}

pub fn fivevar_graph() -> CausalGraph {
    CausalGraph::new(vec![
        NodeSpec::new("G", &["g"], &[]),
        NodeSpec::new("Y", &["y"], &["G"]),
        NodeSpec::new("X1", &["x1"], &["Y"]),
        NodeSpec::new("X2", &["x2"], &["G", "Y"]),
        NodeSpec::new("X3", &["x3"], &["G", "Y"]),
    ])
    .unwrap()
}

/// Draws `p.n` rows with columns `g, y, x1, x2, x3`.
pub fn simulate_fivevar(p: &FiveVarParams) -> Result<(TabularDataset, CausalGraph)> {
    p.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let mut flips = ChaCha8Rng::seed_from_u64(p.seed);
    flips.set_stream(1);
    let mut flip = |bit: f64, prob: f64| {
        if flips.random_bool(prob) {
            1.0 - bit
        } else {
            bit
        }
    };
    let mut cols: Vec<Vec<f64>> = (0..5).map(|_| Vec::with_capacity(p.n)).collect();
    for _ in 0..p.n {
        let g = if rng.random_bool(0.5) { 1.0 } else { 0.0 };
        let y = flip(g, p.q);
        let (e1, e2, e3): (f64, f64, f64) = (
            StandardNormal.sample(&mut rng),
            StandardNormal.sample(&mut rng),
            StandardNormal.sample(&mut rng),
        );
        let x1 = p.omega * flip(y, NOISE_FLIP) + e1;
        let x2 = flip(y, NOISE_FLIP) + g + e2;
        let x3 = flip(y, NOISE_FLIP) + p.mu * g + e3;
        for (c, v) in cols.iter_mut().zip([g, y, x1, x2, x3]) {
            c.push(v);
        }
    }
    let schema = ["g", "y", "x1", "x2", "x3"].map(String::from).to_vec();
    Ok((TabularDataset::from_columns(schema, &cols)?, fivevar_graph()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean(v: &[f64]) -> f64 {
        v.iter().sum::<f64>() / v.len() as f64
    }

    fn corr(a: &[f64], b: &[f64]) -> f64 {
        let (ma, mb) = (mean(a), mean(b));
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    #[test]
    fn group_is_balanced() {
        let p = FiveVarParams::default();
        let (d, g) = simulate_fivevar(&p).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(d.n_rows(), 20_000);
        let m = mean(&d.column("g").unwrap());
        assert!((m - 0.5).abs() < 3.0 * 0.5 / (p.n as f64).sqrt());
    }

    #[test]
    fn label_flip_rate() {
        let p = FiveVarParams::default();
        let (d, _) = simulate_fivevar(&p).unwrap();
        let g = d.column("g").unwrap();
        let y = d.column("y").unwrap();
        let rate = g.iter().zip(&y).filter(|(a, b)| a != b).count() as f64 / p.n as f64;
        assert!((rate - p.q).abs() < 3.0 * (p.q * (1.0 - p.q) / p.n as f64).sqrt());
    }

    #[test]
    fn omega_zero_decouples_x1() {
        let p = FiveVarParams {
            omega: 0.0,
            ..FiveVarParams::default()
        };
        let (d, _) = simulate_fivevar(&p).unwrap();
        let r = corr(&d.column("x1").unwrap(), &d.column("y").unwrap());
        assert!(r.abs() < 3.0 / (p.n as f64).sqrt(), "{r}");
    }

    #[test]
    fn settings_change_only_their_parameters() {
        let src = FiveVarParams::default();
        let a = FiveVarShift::Label(0.5).target_params(&src);
        assert_eq!((a.omega, a.mu, a.q), (src.omega, src.mu, 0.5));
        let b = FiveVarShift::Group(0.0).target_params(&src);
        assert_eq!((b.omega, b.q, b.mu), (src.omega, src.q, 0.0));
        let c = FiveVarShift::LabelAndX1(0.3).target_params(&src);
        assert_eq!((c.omega, c.mu, c.q), (0.0, src.mu, 0.3));
        let d = FiveVarShift::LabelAndX3(0.3).target_params(&src);
        assert_eq!((d.omega, d.mu, d.q), (src.omega, -1.0, 0.3));
    }

    #[test]
    fn seeded_and_validated() {
        let p = FiveVarParams {
            n: 50,
            ..FiveVarParams::default()
        };
        assert_eq!(simulate_fivevar(&p).unwrap().0, simulate_fivevar(&p).unwrap().0);
        assert!(simulate_fivevar(&FiveVarParams { q: 1.5, ..p }).is_err());
    }
}
