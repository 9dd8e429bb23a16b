//! L2-penalized logistic regression fitted by damped Newton iterations.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::features::FeatureMap;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    pub l2: f64,
    pub feature_map: FeatureMap,
    pub max_iter: usize,
    /// Stop once the gradient's Euclidean norm falls to this value.
    pub tol: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            l2: 1e-4,
            feature_map: FeatureMap::Raw,
            max_iter: 500,
            tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogisticModel {
    pub feature_map: FeatureMap,
    mean: Vec<f64>,
    scale: Vec<f64>,
    /// Intercept first, then one coefficient per standardized expanded feature.
    params: Vec<f64>,
    /// Objective value after each accepted iteration, starting at the initial point.
    pub objective_trace: Vec<f64>,
    pub converged: bool,
}

pub(crate) fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Penalized mean negative log-likelihood over a design matrix whose first
/// column is the intercept. The intercept is not penalized.
pub struct LogisticObjective<'a> {
    design: &'a DMatrix<f64>,
    labels: &'a [f64],
    l2: f64,
}

impl<'a> LogisticObjective<'a> {
    pub fn new(design: &'a DMatrix<f64>, labels: &'a [f64], l2: f64) -> Self {
        LogisticObjective { design, labels, l2 }
    }

    fn penalty(&self, params: &DVector<f64>) -> f64 {
        0.5 * self.l2 * params.rows(1, params.len() - 1).norm_squared()
    }

    pub fn value(&self, params: &DVector<f64>) -> f64 {
        let z = self.design * params;
        let n = self.labels.len() as f64;
        let nll: f64 = z
            .iter()
            .zip(self.labels)
            .map(|(&z, &y)| softplus(z) - y * z)
            .sum();
        nll / n + self.penalty(params)
    }

    pub fn gradient(&self, params: &DVector<f64>) -> DVector<f64> {
        let n = self.labels.len() as f64;
        let z = self.design * params;
        let resid = DVector::from_iterator(
            z.len(),
            z.iter().zip(self.labels).map(|(&z, &y)| sigmoid(z) - y),
        );
        let mut g = self.design.tr_mul(&resid) / n;
        for j in 1..g.len() {
            g[j] += self.l2 * params[j];
        }
        g
    }

    pub fn hessian(&self, params: &DVector<f64>) -> DMatrix<f64> {
        let n = self.labels.len() as f64;
        let z = self.design * params;
        let mut weighted = self.design.clone();
        for (i, &zi) in z.iter().enumerate() {
            let p = sigmoid(zi);
            let s = p * (1.0 - p) / n;
            weighted.row_mut(i).scale_mut(s);
        }
        let mut h = self.design.tr_mul(&weighted);
        for j in 1..h.nrows() {
            h[(j, j)] += self.l2;
        }
        h
    }
}

pub(crate) fn check_classifier_inputs(features: &[f64], k: usize, labels: &[f64], min_n: usize) -> Result<usize> {
    let n = labels.len();
    if k == 0 || features.len() != n * k {
        return Err(Error::InvalidParameter(format!(
            "feature matrix of length {} does not hold {n} rows of {k} features",
            features.len()
        )));
    }
    if n < min_n {
        return Err(Error::TooFewSamples { n, min: min_n });
    }
    if features.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteFeature);
    }
    if labels.iter().any(|&y| y != 0.0 && y != 1.0) {
        return Err(Error::LabelNotBinary {
            row: labels.iter().position(|&y| y != 0.0 && y != 1.0).unwrap(),
            value: *labels.iter().find(|&&y| y != 0.0 && y != 1.0).unwrap(),
        });
    }
    let pos = labels.iter().filter(|&&y| y == 1.0).count();
    if pos == 0 || pos == n {
        return Err(Error::SingleClass);
    }
    Ok(n)
}


/// Fits `P(label = 1 | x) = σ(b + w·φ(x))` on row-major `features` with `k`
/// columns.
pub fn fit_logistic(
    features: &[f64],
    k: usize,
    labels: &[f64],
    config: &LogisticConfig,
) -> Result<LogisticModel> {
    let n = check_classifier_inputs(features, k, labels, 2)?;
    let map = config.feature_map;
    let dim = map.output_dim(k);

    let mut expanded = Vec::with_capacity(n * dim);
    let mut buf = Vec::with_capacity(dim);
    for row in features.chunks_exact(k) {
        map.expand_into(row, &mut buf);
        expanded.extend_from_slice(&buf);
    }
    let mut mean = vec![0.0; dim];
    let mut scale = vec![0.0; dim];
    for row in expanded.chunks_exact(dim) {
        for j in 0..dim {
            mean[j] += row[j];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    for row in expanded.chunks_exact(dim) {
        for j in 0..dim {
            scale[j] += (row[j] - mean[j]).powi(2);
        }
    }
    for s in scale.iter_mut() {
        *s = (*s / n as f64).sqrt();
        if *s < 1e-12 {
            *s = 1.0;
        }
    }

    let design = DMatrix::from_fn(n, dim + 1, |i, j| {
        if j == 0 {
            1.0
        } else {
            (expanded[i * dim + j - 1] - mean[j - 1]) / scale[j - 1]
        }
    });
    let objective = LogisticObjective::new(&design, labels, config.l2);

    let mut params = DVector::zeros(dim + 1);
    let prior = labels.iter().sum::<f64>() / n as f64;
    params[0] = (prior / (1.0 - prior)).ln();
    let mut current = objective.value(&params);
    let mut trace = vec![current];
    let mut converged = false;

    for _ in 0..config.max_iter {
        let grad = objective.gradient(&params);
        if grad.norm() <= config.tol {
            converged = true;
            break;
        }
        let mut hess = objective.hessian(&params);
        let step = loop {
            if let Some(chol) = hess.clone().cholesky() {
                break chol.solve(&grad);
            }
            let jitter = 1e-10 * (1.0 + hess.diagonal().max());
            for j in 0..hess.nrows() {
                hess[(j, j)] += jitter.max(1e-12);
            }
        };
        let slope = grad.dot(&step);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let candidate = &params - &step * t;
            let value = objective.value(&candidate);
            if value <= current - 1e-4 * t * slope {
                accepted = Some((candidate, value));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((p, v)) => {
                params = p;
                current = v;
                trace.push(v);
            }
            // no decrease representable in floating point
            None => {
                converged = true;
                break;
            }
        }
    }

    Ok(LogisticModel {
        feature_map: map,
        mean,
        scale,
        params: params.iter().copied().collect(),
        objective_trace: trace,
        converged,
    })
}

impl LogisticModel {
    pub fn input_dim(&self) -> usize {
        match self.feature_map {
            FeatureMap::Raw => self.mean.len(),
            FeatureMap::Quadratic => {
                // dim = k + k(k+1)/2
                let dim = self.mean.len();
                (0..=dim).find(|&k| FeatureMap::Quadratic.output_dim(k) == dim).unwrap()
            }
        }
    }

    pub fn intercept(&self) -> f64 {
        self.params[0]
    }

    /// Coefficients on the original (unstandardized) expanded features.
    pub fn coefficients(&self) -> Vec<f64> {
        self.params[1..]
            .iter()
            .zip(&self.scale)
            .map(|(w, s)| w / s)
            .collect()
    }

    pub fn predict_logit(&self, x: &[f64]) -> f64 {
        let mut buf = Vec::with_capacity(self.mean.len());
        self.feature_map.expand_into(x, &mut buf);
        let mut z = self.params[0];
        for (j, v) in buf.iter().enumerate() {
            z += self.params[j + 1] * (v - self.mean[j]) / self.scale[j];
        }
        z
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.predict_logit(x))
    }
}
