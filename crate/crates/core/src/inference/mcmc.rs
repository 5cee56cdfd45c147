//! Blockwise adaptive random-walk Metropolis–Hastings.
//!
//! Each pair-copula's parameters form one block, updated in random order
//! every sweep on the unconstrained scale. Priors are flat on the natural
//! parameter ranges, which on the z-scale contributes the log-Jacobian.
//! After `adapt_start` sweeps the proposal for a block of size d is the
//! mixture (1-β)·N(0, λ·2.38²/d·Σ̂) + β·N(0, 0.1²/d·I), with Σ̂ the running
//! covariance of the block's draws and λ a Robbins–Monro scale driven
//! towards the target acceptance rate.

use super::mle::param_table;
use super::transform::ParamTransform;
use super::{FitReport, MetricSummary, Method};
use crate::dvine::{loglik_value, DVineSpec};
use crate::error::{Error, Result};
use crate::stats;
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McmcConfig {
    pub iterations: usize,
    pub burn_in: usize,
    pub adapt_start: usize,
    pub target_accept: f64,
    /// Weight β of the fixed-scale component of the proposal.
    pub beta: f64,
    /// Scale of the fixed component (and of all proposals before
    /// adaptation starts).
    pub init_scale: f64,
    /// Retain every `thin`-th post-burn-in draw.
    pub thin: usize,
    /// Compute dependence metrics on every `metric_thin`-th retained draw.
    pub metric_thin: usize,
    pub seed: u64,
    /// Starting natural parameters; defaults to the template's.
    pub init: Option<Vec<f64>>,
}

impl Default for McmcConfig {
    fn default() -> Self {
        McmcConfig {
            iterations: 20_000,
            burn_in: 5_000,
            adapt_start: 1_000,
            target_accept: 0.234,
            beta: 0.05,
            init_scale: 0.1,
            thin: 1,
            metric_thin: 10,
            seed: 1,
            init: None,
        }
    }
}

impl McmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.iterations {
            return Err(Error::param("burn-in must be shorter than the chain"));
        }
        if self.thin == 0 || self.metric_thin == 0 {
            return Err(Error::param("thinning intervals must be positive"));
        }
        if !(0.0..=1.0).contains(&self.beta) || !(self.init_scale > 0.0) {
            return Err(Error::param("beta must lie in [0,1] and init_scale be positive"));
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return Err(Error::param("target acceptance must lie in (0,1)"));
        }
        Ok(())
    }
}

/// One retained draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRow {
    pub iteration: usize,
    pub z: Vec<f64>,
    pub x: Vec<f64>,
    pub loglik: f64,
}

/// Dependence metrics evaluated on a vine (name, value).
pub type MetricFn<'a> = dyn Fn(&DVineSpec) -> Result<Vec<(String, f64)>> + Sync + 'a;

#[derive(Debug, Clone)]
pub struct McmcResult {
    pub spec: DVineSpec,
    pub report: FitReport,
    pub chain: Vec<ChainRow>,
    /// (iteration, metric values) on the metric-thinned draws.
    pub metric_draws: Vec<(usize, Vec<f64>)>,
    pub metric_names: Vec<String>,
}

/// Running mean and covariance (Welford).
struct RunningCov {
    n: f64,
    mean: DVector<f64>,
    m2: DMatrix<f64>,
}

impl RunningCov {
    fn new(d: usize) -> Self {
        RunningCov {
            n: 0.0,
            mean: DVector::zeros(d),
            m2: DMatrix::zeros(d, d),
        }
    }

    fn push(&mut self, x: &[f64]) {
        let x = DVector::from_column_slice(x);
        self.n += 1.0;
        let delta = &x - &self.mean;
        self.mean += &delta / self.n;
        let delta2 = &x - &self.mean;
        self.m2 += &delta * delta2.transpose();
    }

    fn cov(&self) -> DMatrix<f64> {
        &self.m2 / (self.n - 1.0).max(1.0)
    }
}

struct Block {
    start: usize,
    len: usize,
    cov: RunningCov,
    log_scale: f64,
    accepted: usize,
    tried: usize,
    accepted_adapting: usize,
    tried_adapting: usize,
    idle: usize,
}

/// DIC₂ = -4·mean(loglik draws) + 2·loglik at the point estimate.
pub fn dic2(chain_loglik: &[f64], loglik_at_point: f64) -> Result<f64> {
    if chain_loglik.is_empty() {
        return Err(Error::param("empty chain"));
    }
    let mean = chain_loglik.iter().sum::<f64>() / chain_loglik.len() as f64;
    Ok(-4.0 * mean + 2.0 * loglik_at_point)
}

fn gaussian_vec(rng: &mut ChaCha8Rng, d: usize) -> DVector<f64> {
    DVector::from_iterator(d, (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// Posterior sampling for the pair-copula parameters of `template`.
pub fn fit_mcmc(
    template: &DVineSpec,
    u: &[f64],
    cfg: &McmcConfig,
    metrics: Option<&MetricFn>,
) -> Result<McmcResult> {
    cfg.validate()?;
    let tr = ParamTransform::for_spec(template);
    let x0 = cfg.init.clone().unwrap_or_else(|| template.params_flat());
    if x0.len() != tr.dim() {
        return Err(Error::param("initial parameter vector has the wrong length"));
    }
    let mut z = tr.to_unconstrained(&x0);
    let log_post = |z: &[f64]| -> (f64, f64) {
        match tr.spec_at(template, z).and_then(|s| loglik_value(&s, u)) {
            Ok(ll) if ll.is_finite() => (ll + tr.ln_jacobian(z), ll),
            _ => (f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    };
    let (mut lp, mut ll) = log_post(&z);
    if !lp.is_finite() {
        return Err(Error::Fit("initial parameters have zero posterior density".into()));
    }

    let mut blocks = Vec::new();
    let mut off = 0;
    for c in template.pairs() {
        let len = c.family().param_names().len();
        if len > 0 {
            blocks.push(Block {
                start: off,
                len,
                cov: RunningCov::new(len),
                log_scale: 0.0,
                accepted: 0,
                tried: 0,
                accepted_adapting: 0,
                tried_adapting: 0,
                idle: 0,
            });
        }
        off += len;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..blocks.len()).collect();
    let mut chain = Vec::new();
    let mut trace = Vec::with_capacity(cfg.iterations);
    for it in 0..cfg.iterations {
        order.shuffle(&mut rng);
        let adapting = it >= cfg.adapt_start;
        for &b in &order {
            let blk = &mut blocks[b];
            let d = blk.len as f64;
            let fixed = !adapting || rng.random::<f64>() < cfg.beta;
            let step = if fixed {
                gaussian_vec(&mut rng, blk.len) * (cfg.init_scale / d.sqrt())
            } else {
                let scale = blk.log_scale.exp() * 2.38 * 2.38 / d;
                let mut cov = blk.cov.cov() * scale;
                for i in 0..blk.len {
                    cov[(i, i)] += 1e-10;
                }
                match cov.cholesky() {
                    Some(ch) => ch.l() * gaussian_vec(&mut rng, blk.len),
                    None => gaussian_vec(&mut rng, blk.len) * (cfg.init_scale / d.sqrt()),
                }
            };
            let mut prop = z.clone();
            for i in 0..blk.len {
                prop[blk.start + i] += step[i];
            }
            let (lp_new, ll_new) = log_post(&prop);
            let log_ratio = lp_new - lp;
            let accept = log_ratio >= 0.0 || rng.random::<f64>().ln() < log_ratio;
            blk.tried += 1;
            if adapting {
                blk.tried_adapting += 1;
                blk.accepted_adapting += usize::from(accept);
            }
            if accept {
                z = prop;
                lp = lp_new;
                ll = ll_new;
                blk.accepted += 1;
                blk.idle = 0;
            } else if adapting {
                blk.idle += 1;
                if blk.idle >= 1000 {
                    return Err(Error::Diagnostics(format!(
                        "block starting at parameter {} accepted nothing in 1000 sweeps",
                        blk.start
                    )));
                }
            }
            if adapting && !fixed {
                let gain = 1.0 / ((it - cfg.adapt_start + 1) as f64).sqrt();
                let acc = if accept { 1.0 } else { log_ratio.exp().min(1.0) };
                blk.log_scale += gain * (acc - cfg.target_accept);
            }
        }
        for blk in &mut blocks {
            blk.cov.push(&z[blk.start..blk.start + blk.len]);
        }
        trace.push(ll);
        if it >= cfg.burn_in && (it - cfg.burn_in) % cfg.thin == 0 {
            chain.push(ChainRow {
                iteration: it,
                x: tr.to_constrained(&z),
                z: z.clone(),
                loglik: ll,
            });
        }
    }

    // posterior means and 90% intervals of the natural parameters
    let d = tr.dim();
    let mut mean = vec![0.0; d];
    for row in &chain {
        for (m, x) in mean.iter_mut().zip(&row.x) {
            *m += x / chain.len() as f64;
        }
    }
    let spec = template.with_params_flat(&mean)?;
    let loglik_mean = loglik_value(&spec, u)?;
    let mut params = param_table(&spec, &vec![None; d]);
    for (i, p) in params.iter_mut().enumerate() {
        let col: Vec<f64> = chain.iter().map(|r| r.x[i]).collect();
        p.lower = stats::quantile(&col, 0.05);
        p.upper = stats::quantile(&col, 0.95);
        p.se = Some(sd(&col));
    }

    let lls: Vec<f64> = chain.iter().map(|r| r.loglik).collect();
    let best = lls.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let dic = dic2(&lls, best)?;

    let mut metric_draws = Vec::new();
    let mut metric_names = Vec::new();
    let mut metric_summaries = Vec::new();
    if let Some(mf) = metrics {
        let picked: Vec<&ChainRow> = chain.iter().step_by(cfg.metric_thin).collect();
        let evaluated: Result<Vec<(usize, Vec<(String, f64)>)>> = picked
            .par_iter()
            .map(|row| {
                let s = template.with_params_flat(&row.x)?;
                Ok((row.iteration, mf(&s)?))
            })
            .collect();
        let evaluated = evaluated?;
        if let Some((_, first)) = evaluated.first() {
            metric_names = first.iter().map(|(n, _)| n.clone()).collect();
        }
        for (i, name) in metric_names.iter().enumerate() {
            let col: Vec<f64> = evaluated.iter().map(|(_, v)| v[i].1).collect();
            metric_summaries.push(MetricSummary {
                name: name.clone(),
                estimate: col.iter().sum::<f64>() / col.len() as f64,
                se: Some(sd(&col)),
                lower: Some(stats::quantile(&col, 0.05)),
                upper: Some(stats::quantile(&col, 0.95)),
            });
        }
        metric_draws = evaluated
            .into_iter()
            .map(|(it, v)| (it, v.into_iter().map(|(_, x)| x).collect()))
            .collect();
    }

    // rates after adaptation starts, or over the whole chain if it never does
    let acceptance = blocks
        .iter()
        .map(|b| {
            if b.tried_adapting > 0 {
                b.accepted_adapting as f64 / b.tried_adapting as f64
            } else {
                b.accepted as f64 / b.tried.max(1) as f64
            }
        })
        .collect();
    Ok(McmcResult {
        report: FitReport {
            method: Method::Mcmc,
            model: spec.clone(),
            loglik: loglik_mean,
            n_obs: u.len(),
            params,
            metrics: metric_summaries,
            converged: true,
            evaluations: cfg.iterations * blocks.len(),
            loglik_trace: trace,
            acceptance,
            dic2: Some(dic),
        },
        spec,
        chain,
        metric_draws,
        metric_names,
    })
}

fn sd(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = x.iter().sum::<f64>() / x.len() as f64;
    (x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64).sqrt()
}
