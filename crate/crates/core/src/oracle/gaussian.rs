//! Linear-Gaussian scenario with closed-form performance and attributions.
//!
//! Source: `X ~ N(μ₁, σ²_X)`, `Y = θ₁X + N(0, σ²_Y)`; the target swaps in
//! `μ₂, θ₂`. The model is `f(x) = φx` under squared loss.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::TabularDataset;
use crate::error::{Error, Result};
use crate::graph::{CausalGraph, NodeSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianScenario {
    pub mu1: f64,
    pub mu2: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub sigma_x2: f64,
    pub sigma_y2: f64,
    pub phi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Env {
    Source,
    Target,
}

impl GaussianScenario {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.mu1,
            self.mu2,
            self.theta1,
            self.theta2,
            self.sigma_x2,
            self.sigma_y2,
            self.phi,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("scenario values must be finite".into()));
        }
        if !(self.sigma_x2 > 0.0 && self.sigma_y2 > 0.0) {
            return Err(Error::InvalidParameter("variances must be positive".into()));
        }
        Ok(())
    }

    /// Source settings of the simulation study: `μ₁ = 0, θ₁ = 1,
    /// σ²_X = 0.5, σ²_Y = 0.25, φ = 0.9`, with the target left unshifted.
    pub fn simulation_study() -> Self {
        GaussianScenario {
            mu1: 0.0,
            mu2: 0.0,
            theta1: 1.0,
            theta2: 1.0,
            sigma_x2: 0.5,
            sigma_y2: 0.25,
            phi: 0.9,
        }
    }

    /// Setting of the estimator convergence study: `μ₁ = 1 → μ₂ = 0.5`,
    /// `θ₁ = 1 → θ₂ = 0.5`. Its attributions are (−0.06375, 0.16875).
    pub fn convergence_study() -> Self {
        GaussianScenario {
            mu1: 1.0,
            mu2: 0.5,
            theta2: 0.5,
            ..Self::simulation_study()
        }
    }

    pub fn with_target(self, mu2: f64, theta2: f64) -> Self {
        GaussianScenario { mu2, theta2, ..self }
    }

    /// Source and target exchanged.
    pub fn swapped(self) -> Self {
        GaussianScenario {
            mu1: self.mu2,
            mu2: self.mu1,
            theta1: self.theta2,
            theta2: self.theta1,
            ..self
        }
    }

    fn params(&self, env: Env) -> (f64, f64) {
        match env {
            Env::Source => (self.mu1, self.theta1),
            Env::Target => (self.mu2, self.theta2),
        }
    }
}

/// Expected squared loss: `(θ−φ)²σ²_X + σ²_Y + (θ−φ)²μ²`.
pub fn gaussian_perf(s: &GaussianScenario, env: Env) -> f64 {
    let (mu, theta) = s.params(env);
    let b = (theta - s.phi).powi(2);
    b * s.sigma_x2 + s.sigma_y2 + b * mu * mu
}

/// `Val` of each coalition of `{D_X, D_{Y|X}}` in bitmask order:
/// `[∅, {D_X}, {D_{Y|X}}, {D_X, D_{Y|X}}]`.
pub fn gaussian_values(s: &GaussianScenario) -> [f64; 4] {
    let b1 = (s.theta1 - s.phi).powi(2);
    let b2 = (s.theta2 - s.phi).powi(2);
    let val_x = b1 * (s.mu2 * s.mu2 - s.mu1 * s.mu1);
    let val_y = (s.sigma_x2 + s.mu1 * s.mu1) * (b2 - b1);
    let full = gaussian_perf(s, Env::Target) - gaussian_perf(s, Env::Source);
    [0.0, val_x, val_y, full]
}

/// Closed-form `(Attr(D_X), Attr(D_{Y|X}))`.
pub fn gaussian_attr(s: &GaussianScenario) -> (f64, f64) {
    let b1 = (s.theta1 - s.phi).powi(2);
    let b2 = (s.theta2 - s.phi).powi(2);
    let (m1, m2) = (s.mu1 * s.mu1, s.mu2 * s.mu2);
    let attr_x = (0.5 * m2 - 0.5 * m1) * (b2 + b1);
    let attr_y = (s.sigma_x2 + 0.5 * m1 + 0.5 * m2) * (b2 - b1);
    (attr_x, attr_y)
}

/// KL-divergence baseline `(KL_X, KL_{Y|X})` of the joint-shift method.
pub fn gaussian_kl_baseline(s: &GaussianScenario) -> (f64, f64) {
    let kl_x = (s.mu2 - s.mu1).powi(2) / (2.0 * s.sigma_x2);
    let kl_y = (s.theta2 - s.theta1).powi(2) / (2.0 * s.sigma_y2) * (s.sigma_x2 + s.mu2 * s.mu2);
    (kl_x, kl_y)
}

fn log_normal_ratio(v: f64, mean_t: f64, mean_s: f64, var: f64) -> f64 {
    ((v - mean_s).powi(2) - (v - mean_t).powi(2)) / (2.0 * var)
}

/// Exact `(ln w_X, ln w_{Y|X})` at each `(x, y)`.
pub fn gaussian_true_log_weights(s: &GaussianScenario, x: &[f64], y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let wx = x
        .iter()
        .map(|&xi| log_normal_ratio(xi, s.mu2, s.mu1, s.sigma_x2))
        .collect();
    let wy = x
        .iter()
        .zip(y)
        .map(|(&xi, &yi)| log_normal_ratio(yi, s.theta2 * xi, s.theta1 * xi, s.sigma_y2))
        .collect();
    (wx, wy)
}

/// Exact `(w_X, w_{Y|X})` for the `x`, `y` columns of `rows`.
pub fn gaussian_true_weights(s: &GaussianScenario, rows: &TabularDataset) -> Result<(Vec<f64>, Vec<f64>)> {
    let x = rows.column("x")?;
    let y = rows.column("y")?;
    let (lx, ly) = gaussian_true_log_weights(s, &x, &y);
    Ok((
        lx.into_iter().map(f64::exp).collect(),
        ly.into_iter().map(f64::exp).collect(),
    ))
}

/// `n` draws with columns `x`, `y`, `loss` (squared loss of `φx`).
pub fn simulate_gaussian(s: &GaussianScenario, n: usize, seed: u64, env: Env) -> Result<TabularDataset> {
    s.validate()?;
    let (mu, theta) = s.params(env);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nx = Normal::new(mu, s.sigma_x2.sqrt()).unwrap();
    let ny = Normal::new(0.0, s.sigma_y2.sqrt()).unwrap();
    let mut cols = vec![Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
    for _ in 0..n {
        let x = nx.sample(&mut rng);
        let y = theta * x + ny.sample(&mut rng);
        cols[0].push(x);
        cols[1].push(y);
        cols[2].push((y - s.phi * x).powi(2));
    }
    TabularDataset::from_columns(vec!["x".into(), "y".into(), "loss".into()], &cols)
}

/// `X → Y`, or `Y → X` when `reversed`.
pub fn gaussian_graph(reversed: bool) -> CausalGraph {
    let nodes = if reversed {
        vec![NodeSpec::new("Y", &["y"], &[]), NodeSpec::new("X", &["x"], &["Y"])]
    } else {
        vec![NodeSpec::new("X", &["x"], &[]), NodeSpec::new("Y", &["y"], &["X"])]
    };
    CausalGraph::new(nodes).unwrap()
}
