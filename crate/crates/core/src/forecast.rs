//! One-step-ahead predictive distributions, VaR, and exceedance backtests.
//!
//! An exceedance at level α on day t is y_t < VaR_{t|t-1}(α) for every α,
//! including upper levels such as 0.95, where the exceedance rate then
//! reads as coverage.

use crate::bicop::CLAMP_EPS;
use crate::dvine::{loglik, DVineSpec, VineState};
use crate::error::{Error, Result};
use crate::margins::Margin;
use crate::special::norm_cdf;
use crate::stats;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, DiscreteCDF};

/// The six VaR levels of the standard exceedance table.
pub const DEFAULT_ALPHAS: [f64; 6] = [0.01, 0.05, 0.1, 0.9, 0.95, 0.99];

pub const MIN_DAYS: usize = 100;

/// Predictive distribution of the next value of a univariate series.
pub struct UniPredictive<'a> {
    spec: &'a DVineSpec,
    margin: &'a dyn Margin,
    state: VineState,
}

impl<'a> UniPredictive<'a> {
    /// Conditions on the observed `history` (data scale, oldest first).
    pub fn new(spec: &'a DVineSpec, margin: &'a dyn Margin, history: &[f64]) -> Result<Self> {
        if spec.m() != 1 {
            return Err(Error::param("univariate predictive needs m = 1"));
        }
        let u = margin.pit(history);
        let state = VineState::from_history(spec, &u)?;
        Ok(UniPredictive {
            spec,
            margin,
            state,
        })
    }

    pub fn from_state(spec: &'a DVineSpec, margin: &'a dyn Margin, state: VineState) -> Self {
        UniPredictive {
            spec,
            margin,
            state,
        }
    }

    /// F_{t|t-1}(y).
    pub fn cdf(&self, y: f64) -> f64 {
        let u = self.margin.cdf(y).clamp(CLAMP_EPS, 1.0 - CLAMP_EPS);
        self.state.conditional_cdf(self.spec, u)
    }

    /// VaR_{t|t-1}(α) = F_{t|t-1}⁻¹(α).
    pub fn quantile(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!("alpha={alpha} must lie in (0,1)")));
        }
        let u = self.state.conditional_quantile(self.spec, alpha)?;
        Ok(self.margin.quantile(u.clamp(CLAMP_EPS, 1.0 - CLAMP_EPS)))
    }
}

pub fn predictive_cdf_uni(spec: &DVineSpec, margin: &dyn Margin, history: &[f64], y: f64) -> Result<f64> {
    Ok(UniPredictive::new(spec, margin, history)?.cdf(y))
}

pub fn predictive_var(spec: &DVineSpec, margin: &dyn Margin, history: &[f64], alpha: f64) -> Result<f64> {
    UniPredictive::new(spec, margin, history)?.quantile(alpha)
}

/// Simulated next-day portfolio values, sorted ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioPredictive {
    pub draws: Vec<f64>,
}

impl PortfolioPredictive {
    pub fn var(&self, alpha: f64) -> f64 {
        stats::quantile_sorted(&self.draws, alpha)
    }

    pub fn cdf(&self, y: f64) -> f64 {
        self.draws.partition_point(|&d| d <= y) as f64 / self.draws.len() as f64
    }
}

fn check_weights(weights: &[f64], m: usize) -> Result<()> {
    if weights.len() != m {
        return Err(Error::param(format!("{} weights for {m} series", weights.len())));
    }
    if (weights.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::param("portfolio weights must sum to 1"));
    }
    Ok(())
}

/// Draws `n` next-day vectors from `state` and returns the weighted sums.
fn portfolio_draws(
    spec: &DVineSpec,
    margins: &[&dyn Margin],
    state: &VineState,
    weights: &[f64],
    n: usize,
    seed: u64,
    stream: u64,
) -> Result<PortfolioPredictive> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut draws = Vec::with_capacity(n);
    for _ in 0..n {
        let mut st = state.clone();
        let mut total = 0.0;
        for (i, m) in margins.iter().enumerate() {
            let u = st.step(spec, crate::bicop::open_uniform(&mut rng))?;
            total += weights[i] * m.quantile(u.clamp(CLAMP_EPS, 1.0 - CLAMP_EPS));
        }
        draws.push(total);
    }
    draws.sort_by(f64::total_cmp);
    Ok(PortfolioPredictive { draws })
}

/// Predictive distribution of a weighted portfolio of the m series given
/// the observed rows (oldest first).
pub fn predictive_portfolio(
    spec: &DVineSpec,
    margins: &[&dyn Margin],
    history: &[Vec<f64>],
    weights: &[f64],
    n: usize,
    seed: u64,
) -> Result<PortfolioPredictive> {
    let m = spec.m();
    check_weights(weights, m)?;
    if margins.len() != m || history.iter().any(|r| r.len() != m) {
        return Err(Error::param("margins and history rows must match the vine dimension"));
    }
    let mut stacked = Vec::with_capacity(history.len() * m);
    for row in history {
        for (x, mg) in row.iter().zip(margins) {
            stacked.push(mg.pit(std::slice::from_ref(x))[0]);
        }
    }
    let state = VineState::from_history(spec, &stacked)?;
    portfolio_draws(spec, margins, &state, weights, n, seed, 0)
}

/// Christoffersen conditional-coverage test of an exceedance series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BacktestResult {
    pub alpha: f64,
    pub days: usize,
    pub alpha_hat: f64,
    pub n00: usize,
    pub n01: usize,
    pub n10: usize,
    pub n11: usize,
    pub lr_uc: f64,
    pub p_uc: f64,
    /// `None` when the indicator series is constant.
    pub lr_ind: Option<f64>,
    pub lr_cc: Option<f64>,
    pub p_cc: Option<f64>,
    pub degenerate: bool,
    pub reject95: bool,
    pub reject99: bool,
}

/// x ln y with the convention 0·ln 0 = 0.
fn xlogy(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

pub fn chi2_sf_1(x: f64) -> f64 {
    2.0 * (1.0 - norm_cdf(x.max(0.0).sqrt()))
}

pub fn chi2_sf_2(x: f64) -> f64 {
    (-0.5 * x.max(0.0)).exp()
}

/// LR_uc for n0 non-exceedances and n1 exceedances.
pub fn lr_uc(n0: usize, n1: usize, alpha: f64) -> f64 {
    let (a, b) = (n0 as f64, n1 as f64);
    let pi = b / (a + b);
    let null = xlogy(a, 1.0 - alpha) + xlogy(b, alpha);
    let alt = xlogy(a, 1.0 - pi) + xlogy(b, pi);
    (-2.0 * (null - alt)).max(0.0)
}

/// LR_ind from first-order transition counts.
pub fn lr_ind(n00: usize, n01: usize, n10: usize, n11: usize) -> f64 {
    let [a, b, c, d] = [n00, n01, n10, n11].map(|x| x as f64);
    let pi0 = b / (a + b);
    let pi1 = d / (c + d);
    let pi = (b + d) / (a + b + c + d);
    let alt = xlogy(a, 1.0 - pi0) + xlogy(b, pi0) + xlogy(c, 1.0 - pi1) + xlogy(d, pi1);
    let null = xlogy(a + c, 1.0 - pi) + xlogy(b + d, pi);
    (-2.0 * (null - alt)).max(0.0)
}

/// Backtest of an exceedance indicator series at level α. LR_uc uses all
/// days; LR_ind uses the transitions between consecutive days.
pub fn backtest_indicators(hits: &[bool], alpha: f64) -> Result<BacktestResult> {
    if hits.len() < MIN_DAYS {
        return Err(Error::param(format!("backtest needs at least {MIN_DAYS} days")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha={alpha} must lie in (0,1)")));
    }
    let n1 = hits.iter().filter(|&&h| h).count();
    let n0 = hits.len() - n1;
    let mut counts = [0usize; 4];
    for w in hits.windows(2) {
        counts[2 * usize::from(w[0]) + usize::from(w[1])] += 1;
    }
    let [n00, n01, n10, n11] = counts;
    let uc = lr_uc(n0, n1, alpha);
    let degenerate = n0 == 0 || n1 == 0;
    let (ind, cc, p_cc) = if degenerate {
        (None, None, None)
    } else {
        let ind = lr_ind(n00, n01, n10, n11);
        (Some(ind), Some(uc + ind), Some(chi2_sf_2(uc + ind)))
    };
    let p_uc = chi2_sf_1(uc);
    // with a constant indicator only the coverage part can be judged
    let p = p_cc.unwrap_or(p_uc);
    Ok(BacktestResult {
        alpha,
        days: hits.len(),
        alpha_hat: n1 as f64 / hits.len() as f64,
        n00,
        n01,
        n10,
        n11,
        lr_uc: uc,
        p_uc,
        lr_ind: ind,
        lr_cc: cc,
        p_cc,
        degenerate,
        reject95: p < 0.05,
        reject99: p < 0.01,
    })
}

/// Backtest of realized values against per-day VaR thresholds.
pub fn backtest(series: &[f64], var: &[f64], alpha: f64) -> Result<BacktestResult> {
    if series.len() != var.len() {
        return Err(Error::param("series and VaR lengths differ"));
    }
    let hits: Vec<bool> = series.iter().zip(var).map(|(y, v)| y < v).collect();
    backtest_indicators(&hits, alpha)
}

/// Central `level` interval of the exceedance rate under Binomial(n, α).
pub fn binomial_band(n: usize, alpha: f64, level: f64) -> (f64, f64) {
    let b = Binomial::new(alpha, n as u64).expect("valid binomial");
    let tail = 0.5 * (1.0 - level);
    let lo = b.inverse_cdf(tail) as f64;
    let hi = b.inverse_cdf(1.0 - tail) as f64;
    (lo / n as f64, hi / n as f64)
}

/// In-sample one-step VaR for t = 2..T from a single fitted model; returns
/// var[a][t-2] for each level.
pub fn in_sample_var(
    spec: &DVineSpec,
    margin: &dyn Margin,
    y: &[f64],
    alphas: &[f64],
) -> Result<Vec<Vec<f64>>> {
    if spec.m() != 1 {
        return Err(Error::param("in_sample_var needs a univariate vine"));
    }
    let u = margin.pit(y);
    let res = loglik(spec, &u)?;
    let per_day: Result<Vec<Vec<f64>>> = (1..y.len())
        .into_par_iter()
        .map(|count| {
            let st = VineState::from_grid(spec, &u, &res.grid, count);
            let pred = UniPredictive::from_state(spec, margin, st);
            alphas.iter().map(|&a| pred.quantile(a)).collect()
        })
        .collect();
    let per_day = per_day?;
    Ok((0..alphas.len())
        .map(|a| per_day.iter().map(|d| d[a]).collect())
        .collect())
}

/// Exceedance table of the in-sample VaR at each level.
pub fn rolling_backtest(
    spec: &DVineSpec,
    margin: &dyn Margin,
    y: &[f64],
    alphas: &[f64],
) -> Result<Vec<BacktestResult>> {
    let var = in_sample_var(spec, margin, y, alphas)?;
    alphas
        .iter()
        .zip(&var)
        .map(|(&a, v)| backtest(&y[1..], v, a))
        .collect()
}

/// Portfolio exceedance table over `days` (0-based row indices ≥ 1), each
/// day's distribution simulated with its own stream of `seed`.
pub fn portfolio_backtest(
    spec: &DVineSpec,
    margins: &[&dyn Margin],
    rows: &[Vec<f64>],
    weights: &[f64],
    alphas: &[f64],
    days: &[usize],
    n: usize,
    seed: u64,
) -> Result<Vec<BacktestResult>> {
    let m = spec.m();
    check_weights(weights, m)?;
    if margins.len() != m {
        return Err(Error::param("one margin per series is required"));
    }
    let mut stacked = Vec::with_capacity(rows.len() * m);
    for row in rows {
        for (x, mg) in row.iter().zip(margins) {
            stacked.push(mg.pit(std::slice::from_ref(x))[0]);
        }
    }
    let res = loglik(spec, &stacked)?;
    let per_day: Result<Vec<(f64, Vec<f64>)>> = days
        .par_iter()
        .map(|&t| {
            if t == 0 || t >= rows.len() {
                return Err(Error::param(format!("day {t} outside 1..{}", rows.len())));
            }
            let st = VineState::from_grid(spec, &stacked, &res.grid, t * m);
            let pred = portfolio_draws(spec, margins, &st, weights, n, seed, t as u64)?;
            let realized: f64 = rows[t].iter().zip(weights).map(|(y, w)| y * w).sum();
            Ok((realized, alphas.iter().map(|&a| pred.var(a)).collect()))
        })
        .collect();
    let per_day = per_day?;
    alphas
        .iter()
        .enumerate()
        .map(|(a, &alpha)| {
            let real: Vec<f64> = per_day.iter().map(|d| d.0).collect();
            let var: Vec<f64> = per_day.iter().map(|d| d.1[a]).collect();
            backtest(&real, &var, alpha)
        })
        .collect()
}

#[cfg(test)]
mod tests;
