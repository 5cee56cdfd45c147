//! Parameter estimation: maximum likelihood and adaptive MCMC, with the
//! shared report format.

mod mcmc;
mod mle;
pub(crate) mod optim;
mod transform;

pub use mcmc::{dic2, fit_mcmc, ChainRow, McmcConfig, McmcResult, MetricFn};
pub use mle::{default_start, fit_mle, MleFit, MleOptions};
pub use transform::ParamTransform;

use crate::dvine::DVineSpec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mle,
    Mcmc,
}

/// One parameter of one pair-copula. For MLE the interval is the
/// asymptotic 90% interval clipped to the feasible range; for MCMC it is
/// the 5%–95% posterior quantile range and `se` is the posterior sd.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub pair: usize,
    pub k: usize,
    pub l1: usize,
    pub l2: usize,
    pub name: String,
    pub estimate: f64,
    pub se: Option<f64>,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub name: String,
    pub estimate: f64,
    pub se: Option<f64>,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub method: Method,
    pub model: DVineSpec,
    /// Log-likelihood at the point estimate.
    pub loglik: f64,
    pub n_obs: usize,
    pub params: Vec<ParamSummary>,
    pub metrics: Vec<MetricSummary>,
    pub converged: bool,
    pub evaluations: usize,
    /// Log-likelihood per MCMC iteration (empty for MLE).
    pub loglik_trace: Vec<f64>,
    /// Acceptance rate per parameter block (empty for MLE).
    pub acceptance: Vec<f64>,
    pub dic2: Option<f64>,
}
