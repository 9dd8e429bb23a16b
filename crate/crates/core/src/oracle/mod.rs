//! Ground truth: closed-form Gaussian results, exact enumeration over
//! discrete SCMs, and the synthetic data generators.

mod discrete;
mod fivevar;
mod gaussian;

pub use discrete::{
    discrete_attributions, discrete_values, enumerate_discrete, random_scm, DiscreteNode,
    DiscreteScm, Population, MAX_CONFIGURATIONS, ZERO_RATIO_LOG_WEIGHT,
};
pub use fivevar::{fivevar_graph, simulate_fivevar, FiveVarParams, FiveVarShift};
pub use gaussian::{
    gaussian_attr, gaussian_graph, gaussian_kl_baseline, gaussian_perf, gaussian_true_log_weights,
    gaussian_true_weights, gaussian_values, simulate_gaussian, Env, GaussianScenario,
};
