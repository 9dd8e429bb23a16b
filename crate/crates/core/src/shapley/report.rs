use serde::{Deserialize, Serialize};

use super::AttributionSettings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Permutation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub perf_source: f64,
    pub perf_target: f64,
    pub n_eval_source: usize,
    pub n_eval_target: usize,
    pub classifiers_fitted: usize,
    pub max_abs_log_weight: f64,
    pub coalitions_evaluated: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionReport {
    pub mechanisms: Vec<String>,
    pub attributions: Vec<f64>,
    pub total_change: f64,
    pub residual: f64,
    pub stderr: Option<Vec<f64>>,
    pub method: Method,
    pub settings: AttributionSettings,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedEntry {
    pub index: usize,
    pub mechanism: String,
    pub attribution: f64,
    /// Attribution divided by the total change, absent when the total is ~0.
    pub share: Option<f64>,
}

impl AttributionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// Mechanisms by decreasing |attribution|; ties keep candidate-set order.
    pub fn ranked(&self) -> Vec<RankedEntry> {
        let mut idx: Vec<usize> = (0..self.mechanisms.len()).collect();
        idx.sort_by(|&a, &b| {
            self.attributions[b]
                .abs()
                .total_cmp(&self.attributions[a].abs())
                .then(a.cmp(&b))
        });
        idx.into_iter()
            .map(|i| RankedEntry {
                index: i,
                mechanism: self.mechanisms[i].clone(),
                attribution: self.attributions[i],
                share: (self.total_change.abs() > 1e-12)
                    .then(|| self.attributions[i] / self.total_change),
            })
            .collect()
    }

    /// Index of the mechanism with the largest |attribution|.
    pub fn top_mechanism(&self) -> Option<usize> {
        self.ranked().first().map(|e| e.index)
    }
}
