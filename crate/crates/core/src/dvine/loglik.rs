//! Vine log-likelihood by the column-wise argument recursions. Within a
//! column every term is independent, so the inner loop runs on the rayon
//! pool; terms are summed sequentially afterwards so the result does not
//! depend on the number of threads.

use super::{ConditionalGrid, DVineSpec};
use crate::bicop::ScoreTable;
use crate::error::{Error, Result};
use rayon::prelude::*;

/// Log-likelihood together with the conditional grid it produced.
#[derive(Debug, Clone)]
pub struct LoglikResult {
    pub loglik: f64,
    pub grid: ConditionalGrid,
}

fn check_data(u: &[f64]) -> Result<()> {
    if let Some((i, &x)) = u.iter().enumerate().find(|(_, x)| !(0.0..=1.0).contains(*x)) {
        return Err(Error::domain(format!("copula datum {i} = {x} outside [0,1]")));
    }
    Ok(())
}

/// Univariate Markov-p vine log-density of `u` (length T).
///
/// For lag k the pair-copula c_{k+1} takes the lagged-side conditional
/// u_{t-k|t-1} as first argument and the current-side u_{t|t-k+1} second.
pub fn loglik_uni(spec: &DVineSpec, u: &[f64]) -> Result<LoglikResult> {
    if spec.m() != 1 {
        return Err(Error::param("loglik_uni needs a univariate vine"));
    }
    let n = u.len();
    if n < 2 {
        return Err(Error::param("need at least two observations"));
    }
    check_data(u)?;
    let p = spec.p();
    let mut grid = ConditionalGrid::new(n, p);
    let scores = ScoreTable::build(u, spec.pairs()[..1].iter());
    let mut total = 0.0;
    for k in 1..=p.min(n - 1) {
        let pair = &spec.pairs()[k - 1];
        let g = &grid;
        // t is 0-based here; the recursion needs t >= k
        let terms: Vec<(f64, f64, f64)> = (k..n)
            .into_par_iter()
            .map(|t| {
                if k == 1 {
                    return pair.eval_scored(&scores, t - 1, t, true);
                }
                let lagged = g.get(t - 1, k - 1, 1);
                let current = g.get(t, k - 1, 0);
                pair.eval_all(lagged, current)
            })
            .collect();
        for (off, (ln_c, h1, h2)) in terms.into_iter().enumerate() {
            let t = k + off;
            if !ln_c.is_finite() {
                return Err(Error::NonFiniteTerm { t: t + 1, k });
            }
            total += ln_c;
            grid.set(t, k, 0, h1);
            grid.set(t, k, 1, h2);
        }
    }
    Ok(LoglikResult {
        loglik: total,
        grid,
    })
}

/// Multivariate vine log-density of a T×m matrix given row by row.
pub fn loglik_multi(spec: &DVineSpec, rows: &[Vec<f64>]) -> Result<LoglikResult> {
    if rows.iter().any(|r| r.len() != spec.m()) {
        return Err(Error::param(format!("every row must have {} columns", spec.m())));
    }
    let stacked: Vec<f64> = rows.iter().flatten().copied().collect();
    loglik(spec, &stacked)
}

/// Log-density of the stacked series (time-major, then variable).
pub fn loglik(spec: &DVineSpec, stacked: &[f64]) -> Result<LoglikResult> {
    let (ll, grid) = stacked_recursion(spec, stacked, true)?;
    Ok(LoglikResult {
        loglik: ll,
        grid: grid.expect("grid requested"),
    })
}

/// Log-density only; skips storing the grid.
pub fn loglik_value(spec: &DVineSpec, stacked: &[f64]) -> Result<f64> {
    Ok(stacked_recursion(spec, stacked, false)?.0)
}

fn stacked_recursion(
    spec: &DVineSpec,
    u: &[f64],
    keep: bool,
) -> Result<(f64, Option<ConditionalGrid>)> {
    let m = spec.m();
    let n = u.len();
    if n % m != 0 {
        return Err(Error::param("stacked data length is not a multiple of m"));
    }
    if n < 2 {
        return Err(Error::param("need at least two observations"));
    }
    check_data(u)?;
    let depth = spec.depth();
    let mut grid = keep.then(|| ConditionalGrid::new(n, depth));
    // previous column, indexed by 0-based stacked position
    let mut prev1: Vec<f64> = u.to_vec();
    let mut prev2: Vec<f64> = u.to_vec();
    let mut total = 0.0;
    // positions 2..=m+1 already meet every pair used by the first column
    let first_column = (2..=(m + 1).min(n)).filter_map(|i| spec.stacked_pair(i, 1));
    let scores = ScoreTable::build(u, first_column);
    let last = depth.min(n - 1);
    for r in 1..=last {
        // the final column's h-functions are only needed for the grid
        let need_h = keep || r < last;
        let (p1, p2) = (&prev1, &prev2);
        // 1-based i = r+1..=n ↔ 0-based ii = r..n
        let terms: Vec<Option<(f64, f64, f64)>> = (r..n)
            .into_par_iter()
            .map(|ii| {
                let i = ii + 1;
                let pair = spec.stacked_pair(i, r)?;
                Some(if r == 1 {
                    pair.eval_scored(&scores, ii - 1, ii, need_h)
                } else {
                    pair.eval_all(p2[ii - 1], p1[ii])
                })
            })
            .collect();
        let mut next1 = vec![f64::NAN; n];
        let mut next2 = vec![f64::NAN; n];
        for (off, term) in terms.into_iter().enumerate() {
            let ii = r + off;
            let (a, b) = match term {
                Some((ln_c, h1, h2)) => {
                    if !ln_c.is_finite() {
                        let i = ii + 1;
                        let t = i.div_ceil(m);
                        let k = t - (i - r).div_ceil(m);
                        return Err(Error::NonFiniteTerm { t, k });
                    }
                    total += ln_c;
                    (h1, h2)
                }
                None => (prev1[ii], prev2[ii - 1]),
            };
            next1[ii] = a;
            next2[ii] = b;
            if let Some(g) = grid.as_mut() {
                g.set(ii, r, 0, a);
                g.set(ii, r, 1, b);
            }
        }
        prev1 = next1;
        prev2 = next2;
    }
    Ok((total, grid))
}
