//! WebAssembly bindings for the browser demo.
//!
//! Every operation takes a JSON request and returns a JSON response, so the
//! same functions are exercised natively in tests and from JavaScript.

use serde::{Deserialize, Serialize};
use shiftshap::experiments::gaussian_run;
use shiftshap::oracle::{gaussian_attr, gaussian_kl_baseline, gaussian_perf, Env, GaussianScenario};
use shiftshap::shapley::AttributionSettings;
use shiftshap::{exact_shapley, permutation_shapley, EstimatorKind, TableGame};
use wasm_bindgen::prelude::*;

/// Largest sample size the demo simulates per environment.
pub const MAX_DEMO_N: usize = 20_000;
/// Largest value table accepted by the Shapley operation.
pub const MAX_DEMO_PLAYERS: usize = 10;

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(default)]
pub struct ScenarioInput {
    pub mu1: f64,
    pub mu2: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub sigma_x2: f64,
    pub sigma_y2: f64,
    pub phi: f64,
}

impl Default for ScenarioInput {
    fn default() -> Self {
        let s = GaussianScenario::simulation_study();
        ScenarioInput {
            mu1: s.mu1,
            mu2: 0.5,
            theta1: s.theta1,
            theta2: 0.5,
            sigma_x2: s.sigma_x2,
            sigma_y2: s.sigma_y2,
            phi: s.phi,
        }
    }
}

impl ScenarioInput {
    fn scenario(&self) -> Result<GaussianScenario, String> {
        let s = GaussianScenario {
            mu1: self.mu1,
            mu2: self.mu2,
            theta1: self.theta1,
            theta2: self.theta2,
            sigma_x2: self.sigma_x2,
            sigma_y2: self.sigma_y2,
            phi: self.phi,
        };
        s.validate().map_err(|e| e.to_string())?;
        Ok(s)
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct CurveRequest {
    #[serde(flatten)]
    pub scenario: ScenarioInput,
    pub theta2_min: f64,
    pub theta2_max: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub theta2: f64,
    pub delta: f64,
    pub attr_x: f64,
    pub attr_y_given_x: f64,
    pub kl_x: f64,
    pub kl_y_given_x: f64,
}

/// Closed-form attributions and KL baselines along a grid of target slopes.
pub fn gaussian_curve_json(request: &str) -> Result<String, String> {
    let req: CurveRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    if !(2..=1000).contains(&req.steps) {
        return Err("steps must be between 2 and 1000".into());
    }
    if req.theta2_min.is_nan() || req.theta2_max.is_nan() || req.theta2_min >= req.theta2_max {
        return Err("theta2_min must be below theta2_max".into());
    }
    let base = req.scenario.scenario()?;
    let points: Vec<CurvePoint> = (0..req.steps)
        .map(|i| {
            let t = i as f64 / (req.steps - 1) as f64;
            let theta2 = req.theta2_min + t * (req.theta2_max - req.theta2_min);
            let s = base.with_target(base.mu2, theta2);
            let (attr_x, attr_y_given_x) = gaussian_attr(&s);
            let (kl_x, kl_y_given_x) = gaussian_kl_baseline(&s);
            CurvePoint {
                theta2,
                delta: gaussian_perf(&s, Env::Target) - gaussian_perf(&s, Env::Source),
                attr_x,
                attr_y_given_x,
                kl_x,
                kl_y_given_x,
            }
        })
        .collect();
    Ok(serde_json::to_string(&points).expect("points serialize"))
}

#[derive(Debug, Clone, Deserialize)]
pub struct ShapleyRequest {
    pub players: Vec<String>,
    /// Values of every coalition in bitmask order; the first entry must be 0.
    pub values: Vec<f64>,
    #[serde(default = "default_permutations")]
    pub permutations: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_permutations() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShapleyResponse {
    pub players: Vec<String>,
    pub exact: Vec<f64>,
    pub sampled: Vec<f64>,
    pub stderr: Vec<f64>,
    pub total: f64,
}

/// Exact and permutation-sampled Shapley values of an explicit value table.
pub fn shapley_table_json(request: &str) -> Result<String, String> {
    let req: ShapleyRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    let k = req.players.len();
    if k == 0 || k > MAX_DEMO_PLAYERS {
        return Err(format!("between 1 and {MAX_DEMO_PLAYERS} players are supported"));
    }
    let game = TableGame::new(k, req.values).map_err(|e| e.to_string())?;
    let exact = exact_shapley(&game, MAX_DEMO_PLAYERS).map_err(|e| e.to_string())?;
    let est = permutation_shapley(&game, req.permutations, req.seed).map_err(|e| e.to_string())?;
    let total = game.values()[(1 << k) - 1];
    let response = ShapleyResponse {
        players: req.players,
        exact,
        sampled: est.attributions,
        stderr: est.stderr,
        total,
    };
    Ok(serde_json::to_string(&response).expect("response serializes"))
}

#[derive(Debug, Clone, Deserialize)]
pub struct SimulateRequest {
    #[serde(flatten)]
    pub scenario: ScenarioInput,
    pub n: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub logistic: bool,
    #[serde(default)]
    pub reverse_graph: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateResponse {
    pub mechanisms: Vec<String>,
    pub estimated: Vec<f64>,
    pub exact: Option<[f64; 2]>,
    pub total_change: f64,
    pub exact_total_change: f64,
    pub residual: f64,
}

/// Simulates both environments, estimates weights and attributes the change.
pub fn simulate_json(request: &str) -> Result<String, String> {
    let req: SimulateRequest = serde_json::from_str(request).map_err(|e| e.to_string())?;
    if !(100..=MAX_DEMO_N).contains(&req.n) {
        return Err(format!("n must be between 100 and {MAX_DEMO_N}"));
    }
    let s = req.scenario.scenario()?;
    let mut settings = AttributionSettings::with_seed(req.seed);
    if req.logistic {
        settings.estimator.kind = EstimatorKind::Logistic;
    }
    let report = gaussian_run(&s, req.n, req.reverse_graph, &settings).map_err(|e| e.to_string())?;
    let (ax, ay) = gaussian_attr(&s);
    let response = SimulateResponse {
        mechanisms: report.mechanisms,
        estimated: report.attributions,
        exact: (!req.reverse_graph).then_some([ax, ay]),
        total_change: report.total_change,
        exact_total_change: gaussian_perf(&s, Env::Target) - gaussian_perf(&s, Env::Source),
        residual: report.residual,
    };
    Ok(serde_json::to_string(&response).expect("response serializes"))
}

fn to_js(result: Result<String, String>) -> Result<String, JsValue> {
    result.map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = gaussianCurve)]
pub fn gaussian_curve(request: &str) -> Result<String, JsValue> {
    to_js(gaussian_curve_json(request))
}

#[wasm_bindgen(js_name = shapleyTable)]
pub fn shapley_table(request: &str) -> Result<String, JsValue> {
    to_js(shapley_table_json(request))
}

#[wasm_bindgen]
pub fn simulate(request: &str) -> Result<String, JsValue> {
    to_js(simulate_json(request))
}
