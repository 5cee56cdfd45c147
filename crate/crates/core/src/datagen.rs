//! Seeded simulators for ARCH(q), GARCH(1,1) and SV(1) returns, plus
//! series from a copula model with given margins.
//!
//! All recursions start at the unconditional variance (or log-variance
//! mean) and discard a burn-in of 1000 steps.

use crate::dvine::DVineSpec;
use crate::error::{Error, Result};
use crate::margins::Margin;
use crate::special::norm_quantile;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

pub const BURN_IN: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchParams {
    pub alpha0: f64,
    pub alphas: Vec<f64>,
}

impl ArchParams {
    pub fn new(alpha0: f64, alphas: Vec<f64>) -> Result<Self> {
        let p = ArchParams { alpha0, alphas };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.alphas.iter().sum();
        if !(self.alpha0 > 0.0) || self.alphas.iter().any(|a| !(*a >= 0.0)) || !(sum < 1.0) {
            return Err(Error::param(format!(
                "ARCH needs alpha0 > 0, alpha_j >= 0 and sum(alpha_j) < 1, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn unconditional_variance(&self) -> f64 {
        self.alpha0 / (1.0 - self.alphas.iter().sum::<f64>())
    }

    /// σ_t given the previous q values (most recent last); missing values
    /// at the start of a series are replaced by the unconditional variance.
    pub fn conditional_sd(&self, past: &[f64]) -> f64 {
        let uv = self.unconditional_variance();
        let mut s2 = self.alpha0;
        for (j, a) in self.alphas.iter().enumerate() {
            let y2 = past
                .len()
                .checked_sub(j + 1)
                .map(|i| past[i] * past[i])
                .unwrap_or(uv);
            s2 += a * y2;
        }
        s2.sqrt()
    }

    /// Conditional α-quantiles σ_t Φ⁻¹(α) for every t of a series.
    pub fn conditional_var(&self, y: &[f64], alpha: f64) -> Vec<f64> {
        let z = norm_quantile(alpha);
        let q = self.alphas.len();
        (0..y.len())
            .map(|t| z * self.conditional_sd(&y[t.saturating_sub(q)..t]))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GarchParams {
    pub alpha0: f64,
    pub alpha1: f64,
    pub beta1: f64,
}

impl GarchParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0 > 0.0 && self.alpha1 >= 0.0 && self.beta1 >= 0.0)
            || !(self.alpha1 + self.beta1 < 1.0)
        {
            return Err(Error::param(format!(
                "GARCH needs alpha0 > 0, alpha1, beta1 >= 0 and alpha1 + beta1 < 1, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn unconditional_variance(&self) -> f64 {
        self.alpha0 / (1.0 - self.alpha1 - self.beta1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvParams {
    pub h_bar: f64,
    pub phi1: f64,
    pub sigma2: f64,
}

impl SvParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.phi1.abs() < 1.0) || !(self.sigma2 > 0.0) || !self.h_bar.is_finite() {
            return Err(Error::param(format!(
                "SV needs |phi1| < 1 and sigma2 > 0, got {self:?}"
            )));
        }
        Ok(())
    }

    pub fn log_variance_variance(&self) -> f64 {
        self.sigma2 / (1.0 - self.phi1 * self.phi1)
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn simulate_arch(params: &ArchParams, t_len: usize, seed: u64) -> Result<Vec<f64>> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let q = params.alphas.len();
    let uv = params.unconditional_variance();
    // ring of the last q values, seeded so that y² = unconditional variance
    let mut past = vec![uv.sqrt(); q];
    let mut out = Vec::with_capacity(t_len);
    for step in 0..BURN_IN + t_len {
        let s = params.conditional_sd(&past);
        let y = s * normal(&mut rng);
        if q > 0 {
            past.remove(0);
            past.push(y);
        }
        if step >= BURN_IN {
            out.push(y);
        }
    }
    Ok(out)
}

pub fn simulate_garch(params: &GarchParams, t_len: usize, seed: u64) -> Result<Vec<f64>> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s2 = params.unconditional_variance();
    let mut y_prev2 = s2;
    let mut out = Vec::with_capacity(t_len);
    for step in 0..BURN_IN + t_len {
        s2 = params.alpha0 + params.alpha1 * y_prev2 + params.beta1 * s2;
        let y = s2.sqrt() * normal(&mut rng);
        y_prev2 = y * y;
        if step >= BURN_IN {
            out.push(y);
        }
    }
    Ok(out)
}

pub fn simulate_sv(params: &SvParams, t_len: usize, seed: u64) -> Result<Vec<f64>> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eta_sd = params.sigma2.sqrt();
    let mut h = params.h_bar;
    let mut out = Vec::with_capacity(t_len);
    for step in 0..BURN_IN + t_len {
        h = params.h_bar + params.phi1 * (h - params.h_bar) + eta_sd * normal(&mut rng);
        let y = (0.5 * h).exp() * normal(&mut rng);
        if step >= BURN_IN {
            out.push(y);
        }
    }
    Ok(out)
}

/// Rows y_t = (F_1⁻¹(u_{t,1}), …, F_m⁻¹(u_{t,m})) with u from the vine.
pub fn simulate_copula_model(
    spec: &DVineSpec,
    margins: &[&dyn Margin],
    t_len: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if margins.len() != spec.m() {
        return Err(Error::param(format!(
            "{} margins given for a vine of dimension {}",
            margins.len(),
            spec.m()
        )));
    }
    let rows = spec.simulate_rows(t_len, seed)?;
    Ok(rows
        .into_iter()
        .map(|r| r.iter().zip(margins).map(|(&u, m)| m.quantile(u)).collect())
        .collect())
}

/// Gaussian ARCH(1) log-likelihood conditional on the first observation.
pub fn arch1_loglik(alpha0: f64, alpha1: f64, y: &[f64]) -> f64 {
    let mut ll = 0.0;
    for t in 1..y.len() {
        let s2 = alpha0 + alpha1 * y[t - 1] * y[t - 1];
        ll -= 0.5 * ((2.0 * std::f64::consts::PI * s2).ln() + y[t] * y[t] / s2);
    }
    ll
}
