//! Tabular environments, per-sample losses, and fit/eval splits.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probability clamp applied before taking logs in [`MetricKind::LogLoss`].
pub const LOG_LOSS_CLAMP: f64 = 1e-12;

/// Dense row-major table of finite reals with named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularDataset {
    schema: Vec<String>,
    values: Vec<f64>,
    n: usize,
}

impl TabularDataset {
    pub fn from_rows(schema: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let p = schema.len();
        let mut values = Vec::with_capacity(rows.len() * p);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != p {
                return Err(Error::Csv(format!(
                    "row {i} has {} values, expected {p}",
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        row: i,
                        column: schema[j].clone(),
                    });
                }
            }
            values.extend_from_slice(row);
        }
        Ok(TabularDataset {
            schema,
            values,
            n: rows.len(),
        })
    }

    pub fn from_columns(schema: Vec<String>, columns: &[Vec<f64>]) -> Result<Self> {
        if schema.len() != columns.len() {
            return Err(Error::Csv("schema and column count differ".into()));
        }
        let n = columns.first().map_or(0, Vec::len);
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::Csv("columns have different lengths".into()));
        }
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| columns.iter().map(|c| c[i]).collect())
            .collect();
        Self::from_rows(schema, &rows)
    }

    pub fn schema(&self) -> &[String] {
        &self.schema
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_cols(&self) -> usize {
        self.schema.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.schema.len();
        &self.values[i * p..(i + 1) * p]
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.schema
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let j = self.column_index(name)?;
        Ok((0..self.n).map(|i| self.row(i)[j]).collect())
    }

    pub fn column_indices(&self, names: &[String]) -> Result<Vec<usize>> {
        names.iter().map(|c| self.column_index(c)).collect()
    }

    /// Row-major matrix of the given columns, as used by the classifiers.
    pub fn feature_matrix(&self, cols: &[usize]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n * cols.len());
        for i in 0..self.n {
            let row = self.row(i);
            out.extend(cols.iter().map(|&j| row[j]));
        }
        out
    }

    pub fn select_rows(&self, indices: &[usize]) -> TabularDataset {
        let p = self.schema.len();
        let mut values = Vec::with_capacity(indices.len() * p);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        TabularDataset {
            schema: self.schema.clone(),
            values,
            n: indices.len(),
        }
    }

    /// Returns a copy without the named columns (silently skips absent ones).
    pub fn drop_columns(&self, names: &[&str]) -> TabularDataset {
        let keep: Vec<usize> = (0..self.schema.len())
            .filter(|&j| !names.contains(&self.schema[j].as_str()))
            .collect();
        TabularDataset {
            schema: keep.iter().map(|&j| self.schema[j].clone()).collect(),
            values: self.feature_matrix(&keep),
            n: self.n,
        }
    }

    pub fn with_column(&self, name: &str, values: &[f64]) -> Result<TabularDataset> {
        if values.len() != self.n {
            return Err(Error::Csv(format!(
                "new column {name:?} has {} values for {} rows",
                values.len(),
                self.n
            )));
        }
        if self.schema.iter().any(|c| c == name) {
            return Err(Error::Csv(format!("column {name:?} already exists")));
        }
        let mut schema = self.schema.clone();
        schema.push(name.to_string());
        let rows: Vec<Vec<f64>> = (0..self.n)
            .map(|i| {
                let mut r = self.row(i).to_vec();
                r.push(values[i]);
                r
            })
            .collect();
        TabularDataset::from_rows(schema, &rows)
    }

    /// Headered CSV with full-precision values.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Csv(e.to_string()))?;
        w.write_record(&self.schema)
            .map_err(|e| Error::Csv(e.to_string()))?;
        for i in 0..self.n {
            w.write_record(self.row(i).iter().map(|v| v.to_string()))
                .map_err(|e| Error::Csv(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }
}

fn parse_cell(raw: &str) -> Option<f64> {
    let t = raw.trim();
    match t.to_ascii_lowercase().as_str() {
        "true" => Some(1.0),
        "false" => Some(0.0),
        _ => t.parse::<f64>().ok(),
    }
}

/// Loads a headered CSV. Every cell must parse as a finite number
/// (`true`/`false` map to 1/0). Row indices in errors count data rows from 0.
pub fn load_csv(path: &Path, required_columns: &[String]) -> Result<TabularDataset> {
    let file = std::fs::File::open(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let schema: Vec<String> = reader
        .headers()
        .map_err(|e| Error::Csv(e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    for col in required_columns {
        if !schema.contains(col) {
            return Err(Error::MissingColumn(col.clone()));
        }
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        if record.len() != schema.len() {
            return Err(Error::Csv(format!(
                "row {i} has {} fields, expected {}",
                record.len(),
                schema.len()
            )));
        }
        let mut row = Vec::with_capacity(schema.len());
        for (j, cell) in record.iter().enumerate() {
            let v = parse_cell(cell).ok_or_else(|| Error::NonNumeric {
                row: i,
                column: schema[j].clone(),
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: i,
                    column: schema[j].clone(),
                });
            }
            row.push(v);
        }
        rows.push(row);
    }
    TabularDataset::from_rows(schema, &rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    SquaredError,
    Brier,
    ZeroOne,
    LogLoss,
    Precomputed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricSpec {
    pub kind: MetricKind,
    pub pred_column: Option<String>,
    pub label_column: Option<String>,
    pub loss_column: Option<String>,
}

impl MetricSpec {
    pub fn prediction(kind: MetricKind, pred: &str, label: &str) -> Self {
        MetricSpec {
            kind,
            pred_column: Some(pred.to_string()),
            label_column: Some(label.to_string()),
            loss_column: None,
        }
    }

    pub fn precomputed(loss: &str) -> Self {
        MetricSpec {
            kind: MetricKind::Precomputed,
            pred_column: None,
            label_column: None,
            loss_column: Some(loss.to_string()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            MetricKind::Precomputed if self.loss_column.is_none() => Err(Error::InvalidMetric(
                "precomputed metric requires a loss column".into(),
            )),
            MetricKind::Precomputed => Ok(()),
            _ if self.pred_column.is_none() || self.label_column.is_none() => {
                Err(Error::InvalidMetric(
                    "metric requires prediction and label columns".into(),
                ))
            }
            _ => Ok(()),
        }
    }

    /// Columns that carry model output rather than system variables; they
    /// are excluded from the graph's column partition.
    pub fn auxiliary_columns(&self) -> Vec<&str> {
        match self.kind {
            MetricKind::Precomputed => self.loss_column.iter().map(String::as_str).collect(),
            _ => self.pred_column.iter().map(String::as_str).collect(),
        }
    }

    pub fn required_columns(&self) -> Vec<String> {
        [&self.pred_column, &self.label_column, &self.loss_column]
            .into_iter()
            .flatten()
            .cloned()
            .collect()
    }
}

pub fn per_sample_loss(ds: &TabularDataset, metric: &MetricSpec) -> Result<Vec<f64>> {
    metric.validate()?;
    if metric.kind == MetricKind::Precomputed {
        return ds.column(metric.loss_column.as_deref().unwrap());
    }
    let pred = ds.column(metric.pred_column.as_deref().unwrap())?;
    let label = ds.column(metric.label_column.as_deref().unwrap())?;
    let binary = |row: usize, y: f64| {
        if y == 0.0 || y == 1.0 {
            Ok(())
        } else {
            Err(Error::LabelNotBinary { row, value: y })
        }
    };
    let unit = |row: usize, p: f64| {
        if (0.0..=1.0).contains(&p) {
            Ok(())
        } else {
            Err(Error::PredictionOutOfRange { row, value: p })
        }
    };
    pred.iter()
        .zip(&label)
        .enumerate()
        .map(|(i, (&p, &y))| match metric.kind {
            MetricKind::SquaredError => Ok((y - p).powi(2)),
            MetricKind::Brier => {
                unit(i, p)?;
                binary(i, y)?;
                Ok((y - p).powi(2))
            }
            MetricKind::ZeroOne => {
                binary(i, y)?;
                let class = if p >= 0.5 { 1.0 } else { 0.0 };
                Ok(if class != y { 1.0 } else { 0.0 })
            }
            MetricKind::LogLoss => {
                unit(i, p)?;
                binary(i, y)?;
                let p_observed = if y == 1.0 { p } else { 1.0 - p };
                Ok(-p_observed.max(LOG_LOSS_CLAMP).ln())
            }
            MetricKind::Precomputed => unreachable!(),
        })
        .collect()
}

/// How importance-weighted means are normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// `Σ wᵢℓᵢ / n`
    #[default]
    Plain,
    /// `Σ wᵢℓᵢ / Σ wᵢ`
    SelfNormalized,
}

/// Mean loss, optionally importance weighted.
pub fn perf(losses: &[f64], weights: Option<&[f64]>, norm: Normalization) -> Result<f64> {
    if losses.is_empty() {
        return Err(Error::EmptyLosses);
    }
    let n = losses.len() as f64;
    let Some(w) = weights else {
        return Ok(losses.iter().sum::<f64>() / n);
    };
    if w.len() != losses.len() {
        return Err(Error::InvalidWeights(format!(
            "{} weights for {} losses",
            w.len(),
            losses.len()
        )));
    }
    if w.iter().any(|&x| !x.is_finite() || x < 0.0) {
        return Err(Error::InvalidWeights("weights must be finite and non-negative".into()));
    }
    let total: f64 = w.iter().sum();
    if total == 0.0 {
        return Err(Error::InvalidWeights("all weights are zero".into()));
    }
    let weighted: f64 = losses.iter().zip(w).map(|(l, w)| l * w).sum();
    Ok(match norm {
        Normalization::Plain => weighted / n,
        Normalization::SelfNormalized => weighted / total,
    })
}

/// Disjoint fit/eval partition of `0..n`, both parts sorted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SplitIndices {
    pub fit_indices: Vec<usize>,
    pub eval_indices: Vec<usize>,
    pub seed: u64,
}

pub fn split(n: usize, fraction: f64, seed: u64) -> Result<SplitIndices> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "split fraction {fraction} not in (0, 1)"
        )));
    }
    let n_fit = (n as f64 * fraction).round() as usize;
    if n_fit == 0 || n_fit >= n {
        return Err(Error::SplitTooSmall { n, fraction });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fit = idx[..n_fit].to_vec();
    let mut eval = idx[n_fit..].to_vec();
    fit.sort_unstable();
    eval.sort_unstable();
    Ok(SplitIndices {
        fit_indices: fit,
        eval_indices: eval,
        seed,
    })
}

/// Source and target samples with their per-sample losses.
#[derive(Debug, Clone)]
pub struct EnvironmentPair {
    pub source: TabularDataset,
    pub target: TabularDataset,
    pub loss_source: Vec<f64>,
    pub loss_target: Vec<f64>,
}

impl EnvironmentPair {
    pub fn new(
        source: TabularDataset,
        target: TabularDataset,
        loss_source: Vec<f64>,
        loss_target: Vec<f64>,
    ) -> Result<Self> {
        if source.schema() != target.schema() {
            return Err(Error::SchemaMismatch);
        }
        if source.n_rows() == 0 {
            return Err(Error::EmptyEnvironment("source"));
        }
        if target.n_rows() == 0 {
            return Err(Error::EmptyEnvironment("target"));
        }
        if loss_source.len() != source.n_rows() || loss_target.len() != target.n_rows() {
            return Err(Error::InvalidWeights(
                "loss vectors do not match dataset sizes".into(),
            ));
        }
        if loss_source.iter().chain(&loss_target).any(|l| !l.is_finite()) {
            return Err(Error::InvalidWeights("losses must be finite".into()));
        }
        Ok(EnvironmentPair {
            source,
            target,
            loss_source,
            loss_target,
        })
    }

    /// Computes losses for both environments with one metric.
    pub fn with_metric(
        source: TabularDataset,
        target: TabularDataset,
        metric: &MetricSpec,
    ) -> Result<Self> {
        let ls = per_sample_loss(&source, metric)?;
        let lt = per_sample_loss(&target, metric)?;
        Self::new(source, target, ls, lt)
    }
}
