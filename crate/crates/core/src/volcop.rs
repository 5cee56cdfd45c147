//! Volatility copulas and dependence metrics.
//!
//! For a volatility proxy v = V(y - μ) with V symmetric and increasing in
//! |·|, the copula of (v_s, v_t) follows from the copula C̄ of (y_s, y_t)
//! and the margins by a signed sum over the four sign combinations. It
//! does not depend on the choice of V; `|·|` is the canonical one.

use crate::bicop::{open_uniform, PairCopula, CLAMP_EPS};
use crate::dvine::{DVineSpec, VineState};
use crate::error::{Error, Result};
use crate::margins::Margin;
use crate::quad::GaussLegendre;
use crate::stats;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

const RHO_V_NODES: usize = 200;
const FOLD_TABLE: usize = 512;
const BISECT_TOL: f64 = 1e-10;

/// Volatility proxy V applied to a centred value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum VolTransform {
    #[default]
    Abs,
    Square,
}

impl VolTransform {
    #[inline]
    pub fn apply(&self, a: f64) -> f64 {
        match self {
            VolTransform::Abs => a.abs(),
            VolTransform::Square => a * a,
        }
    }

    /// G = V⁻¹ on the non-negative half-line.
    #[inline]
    pub fn inverse(&self, v: f64) -> f64 {
        match self {
            VolTransform::Abs => v,
            VolTransform::Square => v.max(0.0).sqrt(),
        }
    }
}

/// Distribution of V(y - μ) for a margin of y.
pub struct VolatilityMargin<'a> {
    base: &'a dyn Margin,
    mu: f64,
    transform: VolTransform,
    table_v: Vec<f64>,
    table_f: Vec<f64>,
}

impl<'a> VolatilityMargin<'a> {
    pub fn new(base: &'a dyn Margin) -> Self {
        Self::with_transform(base, VolTransform::Abs)
    }

    pub fn with_transform(base: &'a dyn Margin, transform: VolTransform) -> Self {
        let mu = base.mean();
        let mut vm = VolatilityMargin {
            base,
            mu,
            transform,
            table_v: Vec::new(),
            table_f: Vec::new(),
        };
        // folded half-width at which F_V is numerically 1
        let mut hi = (base.quantile(0.75) - base.quantile(0.25)).abs().max(1e-12);
        while vm.cdf_folded(hi) < 1.0 - 1e-15 && hi < 1e300 {
            hi *= 2.0;
        }
        let table_v: Vec<f64> = (0..=FOLD_TABLE)
            .map(|i| transform.apply(hi * i as f64 / FOLD_TABLE as f64))
            .collect();
        vm.table_f = table_v.iter().map(|&v| vm.cdf(v)).collect();
        vm.table_v = table_v;
        vm
    }

    pub fn mean(&self) -> f64 {
        self.mu
    }

    /// F_V at a half-width g = G(v).
    #[inline]
    fn cdf_folded(&self, g: f64) -> f64 {
        if g <= 0.0 {
            return 0.0;
        }
        (self.base.cdf(self.mu + g) - self.base.cdf(self.mu - g)).clamp(0.0, 1.0)
    }

    pub fn cdf(&self, v: f64) -> f64 {
        self.cdf_folded(self.transform.inverse(v))
    }

    pub fn pdf(&self, v: f64) -> f64 {
        let g = self.transform.inverse(v);
        let jac = match self.transform {
            VolTransform::Abs => 1.0,
            VolTransform::Square => 0.5 / g.max(f64::MIN_POSITIVE),
        };
        (self.base.pdf(self.mu + g) + self.base.pdf(self.mu - g)) * jac
    }

    /// F_V⁻¹ by bisection inside the bracketing table cell.
    pub fn quantile(&self, q: f64) -> f64 {
        if q <= 0.0 {
            return 0.0;
        }
        let n = self.table_f.len();
        let idx = self.table_f.partition_point(|&f| f < q).min(n - 1);
        if idx == 0 {
            return self.table_v[0];
        }
        let (mut lo, mut hi) = (self.table_v[idx - 1], self.table_v[idx]);
        let scale = hi.abs().max(1e-300);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < q {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= BISECT_TOL * scale * 1e-3 {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// G(F_V⁻¹(q)): the half-width |y - μ| at volatility quantile q.
    pub fn folded_quantile(&self, q: f64) -> f64 {
        self.transform.inverse(self.quantile(q))
    }

    /// (F(μ - q), F(μ + q)) for q = G(F_V⁻¹(ũ)), plus the densities there.
    fn corners(&self, u: f64) -> ([f64; 2], [f64; 2]) {
        let g = self.folded_quantile(u);
        let a = [self.base.cdf(self.mu - g), self.base.cdf(self.mu + g)];
        let f = [self.base.pdf(self.mu - g), self.base.pdf(self.mu + g)];
        (a, f)
    }
}

/// Copula of (v_s, v_t) from the level copula `base` and the two margins.
pub fn vol_copula_cdf(
    base: &PairCopula,
    ms: &VolatilityMargin,
    mt: &VolatilityMargin,
    us: f64,
    ut: f64,
) -> Result<f64> {
    if !(0.0..=1.0).contains(&us) || !(0.0..=1.0).contains(&ut) {
        return Err(Error::domain("volatility copula arguments outside [0,1]"));
    }
    if us == 0.0 || ut == 0.0 {
        return Ok(0.0);
    }
    let (a, _) = ms.corners(us);
    let (b, _) = mt.corners(ut);
    let c = |x: f64, y: f64| base.cdf(x.clamp(0.0, 1.0), y.clamp(0.0, 1.0));
    let v = c(a[1], b[1])? - c(a[1], b[0])? - c(a[0], b[1])? + c(a[0], b[0])?;
    Ok(v.clamp(0.0, 1.0))
}

/// Closed form for margins symmetric about their means.
pub fn vol_copula_cdf_symmetric(base: &PairCopula, us: f64, ut: f64) -> Result<f64> {
    let a = [0.5 * (1.0 - us), 0.5 * (1.0 + us)];
    let b = [0.5 * (1.0 - ut), 0.5 * (1.0 + ut)];
    let v = base.cdf(a[1], b[1])? - base.cdf(a[1], b[0])? - base.cdf(a[0], b[1])?
        + base.cdf(a[0], b[0])?;
    Ok(v.clamp(0.0, 1.0))
}

/// Volatility copula on the tensor grid `us × ut` (row-major), using one
/// batched evaluation of the level copula.
pub fn vol_copula_cdf_grid(
    base: &PairCopula,
    ms: &VolatilityMargin,
    mt: &VolatilityMargin,
    us: &[f64],
    ut: &[f64],
) -> Vec<f64> {
    let xs: Vec<f64> = us.iter().flat_map(|&u| ms.corners(u).0).collect();
    let ys: Vec<f64> = ut.iter().flat_map(|&u| mt.corners(u).0).collect();
    signed_sum_grid(base, &xs, &ys, us.len(), ut.len())
}

/// Closed form of `vol_copula_cdf_grid` for symmetric margins.
pub fn vol_copula_cdf_grid_symmetric(base: &PairCopula, us: &[f64], ut: &[f64]) -> Vec<f64> {
    let xs: Vec<f64> = us.iter().flat_map(|&u| [0.5 * (1.0 - u), 0.5 * (1.0 + u)]).collect();
    let ys: Vec<f64> = ut.iter().flat_map(|&u| [0.5 * (1.0 - u), 0.5 * (1.0 + u)]).collect();
    signed_sum_grid(base, &xs, &ys, us.len(), ut.len())
}

fn signed_sum_grid(base: &PairCopula, xs: &[f64], ys: &[f64], ns: usize, nt: usize) -> Vec<f64> {
    let xs: Vec<f64> = xs.iter().map(|x| x.clamp(0.0, 1.0)).collect();
    let ys: Vec<f64> = ys.iter().map(|y| y.clamp(0.0, 1.0)).collect();
    let g = base.cdf_grid(&xs, &ys);
    let w = ys.len();
    let mut out = Vec::with_capacity(ns * nt);
    for i in 0..ns {
        for j in 0..nt {
            let at = |a: usize, b: usize| g[(2 * i + a) * w + 2 * j + b];
            out.push((at(1, 1) - at(1, 0) - at(0, 1) + at(0, 0)).clamp(0.0, 1.0));
        }
    }
    out
}

/// Density of the volatility copula.
pub fn vol_copula_density(
    base: &PairCopula,
    ms: &VolatilityMargin,
    mt: &VolatilityMargin,
    us: f64,
    ut: f64,
) -> Result<f64> {
    let gs = ms.folded_quantile(us);
    let gt = mt.folded_quantile(ut);
    let fvs = ms.pdf(ms.transform.apply(gs));
    let fvt = mt.pdf(mt.transform.apply(gt));
    // densities of V in G-units: f_V·G' cancels with the same factor below
    let (fvs, fvt) = match (ms.transform, mt.transform) {
        (VolTransform::Abs, VolTransform::Abs) => (fvs, fvt),
        _ => (
            ms.base.pdf(ms.mu + gs) + ms.base.pdf(ms.mu - gs),
            mt.base.pdf(mt.mu + gt) + mt.base.pdf(mt.mu - gt),
        ),
    };
    if !(fvs > 0.0 && fvt > 0.0) {
        return Err(Error::Numerical {
            what: format!("volatility margin density underflow at ({us}, {ut})"),
            residual: 0.0,
        });
    }
    let (a, fa) = ms.corners(us);
    let (b, fb) = mt.corners(ut);
    let mut s = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            s += base.density(a[i].clamp(0.0, 1.0), b[j].clamp(0.0, 1.0))? * fa[i] * fb[j];
        }
    }
    Ok(s / (fvs * fvt))
}

/// Closed-form density for symmetric margins: ¼ Σ c̄((1±ũ_s)/2, (1±ũ_t)/2).
pub fn vol_copula_density_symmetric(base: &PairCopula, us: f64, ut: f64) -> Result<f64> {
    let a = [0.5 * (1.0 - us), 0.5 * (1.0 + us)];
    let b = [0.5 * (1.0 - ut), 0.5 * (1.0 + ut)];
    let mut s = 0.0;
    for &x in &a {
        for &y in &b {
            s += base.density(x, y)?;
        }
    }
    Ok(0.25 * s)
}

fn spearman_from_grid(gl: &GaussLegendre, grid: &[f64]) -> f64 {
    let n = gl.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += gl.weights[i] * gl.weights[j] * grid[i * n + j];
        }
    }
    (12.0 * s - 3.0).clamp(-1.0, 1.0)
}

/// Spearman's rho of the volatility copula by 200×200 Gauss–Legendre
/// quadrature of 12∬C_V - 3.
pub fn rho_v(base: &PairCopula, ms: &VolatilityMargin, mt: &VolatilityMargin) -> f64 {
    if let PairCopula::Independence = base {
        return 0.0;
    }
    let gl = GaussLegendre::new(RHO_V_NODES);
    let grid = vol_copula_cdf_grid(base, ms, mt, &gl.nodes, &gl.nodes);
    spearman_from_grid(&gl, &grid)
}

/// `rho_v` for margins symmetric about their means (margin-free).
pub fn rho_v_symmetric(base: &PairCopula) -> f64 {
    if let PairCopula::Independence = base {
        return 0.0;
    }
    let gl = GaussLegendre::new(RHO_V_NODES);
    let grid = vol_copula_cdf_grid_symmetric(base, &gl.nodes, &gl.nodes);
    spearman_from_grid(&gl, &grid)
}

/// Lag-one volatility Spearman of a univariate first-order vine margin.
pub fn rho_v_lag1(spec: &DVineSpec, margin: &dyn Margin) -> Result<f64> {
    if spec.m() != 1 {
        return Err(Error::param("rho_v_lag1 needs a univariate vine"));
    }
    let vm = VolatilityMargin::new(margin);
    Ok(rho_v(&spec.pairs()[0], &vm, &vm))
}

/// Quantile dependence at one level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileDependence {
    pub alpha: f64,
    /// P(u_t < α | u_{t-1} < α)
    pub low: f64,
    /// P(u_t > α | u_{t-1} > α)
    pub up: f64,
    /// P(u_t > 1-α | u_{t-1} < α)
    pub low_up: f64,
    /// P(u_t < α | u_{t-1} > 1-α)
    pub up_low: f64,
}

/// Quantile-dependence curves from a copula CDF C(u_{t-1}, u_t).
///
/// Note that `up` at level α conditions on exceeding α itself, so the
/// upper-tail coefficient at 5% is `up` evaluated at α = 0.95.
pub fn quantile_dependence(
    cdf: impl Fn(f64, f64) -> Result<f64>,
    alphas: &[f64],
) -> Result<Vec<QuantileDependence>> {
    alphas
        .iter()
        .map(|&a| {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::domain(format!("alpha={a} must lie in (0,1)")));
            }
            let caa = cdf(a, a)?;
            Ok(QuantileDependence {
                alpha: a,
                low: (caa / a).clamp(0.0, 1.0),
                up: ((1.0 - 2.0 * a + caa) / (1.0 - a)).clamp(0.0, 1.0),
                low_up: ((a - cdf(a, 1.0 - a)?) / a).clamp(0.0, 1.0),
                up_low: ((a - cdf(1.0 - a, a)?) / a).clamp(0.0, 1.0),
            })
        })
        .collect()
}

/// Rank-based empirical quantile dependence of (x_{t-k}, x_t).
pub fn empirical_quantile_dependence(x: &[f64], k: usize, alphas: &[f64]) -> Vec<QuantileDependence> {
    let n = x.len();
    let r = stats::ranks(x);
    let u: Vec<f64> = r.iter().map(|&v| v / (n as f64 + 1.0)).collect();
    let (prev, next) = (&u[..n - k], &u[k..]);
    let frac = |cond: &dyn Fn(f64) -> bool, event: &dyn Fn(f64) -> bool| {
        let mut hit = 0usize;
        let mut base = 0usize;
        for (&a, &b) in prev.iter().zip(next) {
            if cond(a) {
                base += 1;
                if event(b) {
                    hit += 1;
                }
            }
        }
        if base == 0 {
            f64::NAN
        } else {
            hit as f64 / base as f64
        }
    };
    alphas
        .iter()
        .map(|&a| QuantileDependence {
            alpha: a,
            low: frac(&|v| v < a, &|v| v < a),
            up: frac(&|v| v > a, &|v| v > a),
            low_up: frac(&|v| v < a, &|v| v > 1.0 - a),
            up_low: frac(&|v| v > 1.0 - a, &|v| v < a),
        })
        .collect()
}

/// Simulated Spearman correlations of levels and volatilities between
/// series i at time 1 and series j at time 1+k.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulatedRho {
    pub rho_y: f64,
    pub rho_y_se: f64,
    pub rho_v: f64,
    pub rho_v_se: f64,
}

const MC_BATCHES: usize = 20;

/// Draws `n` independent vine paths of `len` time points; returns the
/// stacked values path by path. Paths are split into blocks with their own
/// ChaCha streams so the result does not depend on the thread count.
pub fn simulate_paths(spec: &DVineSpec, len: usize, n: usize, seed: u64) -> Result<Vec<f64>> {
    let block = 4096;
    let nblocks = n.div_ceil(block);
    let width = len * spec.m();
    let parts: Result<Vec<Vec<f64>>> = (0..nblocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64 + 1);
            let count = block.min(n - b * block);
            let mut out = Vec::with_capacity(count * width);
            for _ in 0..count {
                let mut st = VineState::empty();
                for _ in 0..width {
                    out.push(st.step(spec, open_uniform(&mut rng))?);
                }
            }
            Ok(out)
        })
        .collect();
    Ok(parts?.concat())
}

/// Monte Carlo Spearman of (y_{i,1}, y_{j,1+k}) and of the volatility
/// proxies, with batch standard errors.
pub fn rho_v_simulated(
    spec: &DVineSpec,
    margins: &[&dyn Margin],
    k: usize,
    i: usize,
    j: usize,
    n: usize,
    seed: u64,
    transform: VolTransform,
) -> Result<SimulatedRho> {
    let m = spec.m();
    if margins.len() != m || i >= m || j >= m {
        return Err(Error::param("series index or margin count does not match the vine"));
    }
    let paths = simulate_paths(spec, k + 1, n, seed)?;
    let width = (k + 1) * m;
    let pick = |series: usize, offset: usize| -> (Vec<f64>, Vec<f64>) {
        let mg = margins[series];
        let mu = mg.mean();
        let y: Vec<f64> = paths
            .chunks(width)
            .map(|p| mg.quantile(p[offset * m + series].clamp(CLAMP_EPS, 1.0 - CLAMP_EPS)))
            .collect();
        let v = y.iter().map(|&x| transform.apply(x - mu)).collect();
        (y, v)
    };
    let (ys, vs) = pick(i, 0);
    let (yt, vt) = pick(j, k);
    let (rho_y, rho_y_se) = stats::spearman_with_se(&ys, &yt, MC_BATCHES);
    let (rho_v, rho_v_se) = stats::spearman_with_se(&vs, &vt, MC_BATCHES);
    Ok(SimulatedRho {
        rho_y,
        rho_y_se,
        rho_v,
        rho_v_se,
    })
}

/// Pairwise Spearman matrices P^y_k and P^v_k from one shared simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceMatrices {
    pub lags: Vec<usize>,
    /// rho_y[l][i][j] = Spearman(y_{i,t}, y_{j,t+lags[l]})
    pub rho_y: Vec<Vec<Vec<f64>>>,
    pub rho_v: Vec<Vec<Vec<f64>>>,
    pub rho_y_se: Vec<Vec<Vec<f64>>>,
    pub rho_v_se: Vec<Vec<Vec<f64>>>,
    pub draws: usize,
}

pub fn dependence_matrices(
    spec: &DVineSpec,
    margins: &[&dyn Margin],
    lags: &[usize],
    n: usize,
    seed: u64,
) -> Result<DependenceMatrices> {
    let m = spec.m();
    if margins.len() != m {
        return Err(Error::param("one margin per series is required"));
    }
    let kmax = lags.iter().copied().max().unwrap_or(0);
    let len = kmax + 1;
    let paths = simulate_paths(spec, len, n, seed)?;
    let width = len * m;
    // y[series][offset] over paths
    let mut y = vec![vec![Vec::with_capacity(n); len]; m];
    let mut v = vec![vec![Vec::with_capacity(n); len]; m];
    for p in paths.chunks(width) {
        for off in 0..len {
            for s in 0..m {
                let mg = margins[s];
                let val = mg.quantile(p[off * m + s].clamp(CLAMP_EPS, 1.0 - CLAMP_EPS));
                y[s][off].push(val);
                v[s][off].push((val - mg.mean()).abs());
            }
        }
    }
    let mut out = DependenceMatrices {
        lags: lags.to_vec(),
        rho_y: Vec::new(),
        rho_v: Vec::new(),
        rho_y_se: Vec::new(),
        rho_v_se: Vec::new(),
        draws: n,
    };
    for &k in lags {
        let mut py = vec![vec![0.0; m]; m];
        let mut pv = vec![vec![0.0; m]; m];
        let mut sy = vec![vec![0.0; m]; m];
        let mut sv = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in 0..m {
                if k == 0 && i == j {
                    py[i][j] = 1.0;
                    pv[i][j] = 1.0;
                    continue;
                }
                if k == 0 && j < i {
                    py[i][j] = py[j][i];
                    pv[i][j] = pv[j][i];
                    sy[i][j] = sy[j][i];
                    sv[i][j] = sv[j][i];
                    continue;
                }
                (py[i][j], sy[i][j]) = stats::spearman_with_se(&y[i][0], &y[j][k], MC_BATCHES);
                (pv[i][j], sv[i][j]) = stats::spearman_with_se(&v[i][0], &v[j][k], MC_BATCHES);
            }
        }
        out.rho_y.push(py);
        out.rho_v.push(pv);
        out.rho_y_se.push(sy);
        out.rho_v_se.push(sv);
    }
    Ok(out)
}

/// Normalized 2-D histogram of (u_{t-k}, u_t); densities in row-major
/// order (row = bin of u_{t-k}), averaging to 1.
pub fn empirical_copula_hist(u: &[f64], k: usize, bins: usize) -> Result<Vec<f64>> {
    if bins < 2 {
        return Err(Error::param("need at least 2 bins"));
    }
    if u.len() <= k {
        return Err(Error::param("series shorter than the lag"));
    }
    let mut counts = vec![0usize; bins * bins];
    let bin = |x: f64| ((x * bins as f64).floor() as usize).min(bins - 1);
    for t in k..u.len() {
        counts[bin(u[t - k]) * bins + bin(u[t])] += 1;
    }
    let n = (u.len() - k) as f64;
    let cell = 1.0 / (bins * bins) as f64;
    Ok(counts.iter().map(|&c| c as f64 / n / cell).collect())
}

/// Empirical lag-k Spearman of levels and of |y - mean|.
pub fn empirical_rho(y: &[f64], k: usize) -> (f64, f64) {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let v: Vec<f64> = y.iter().map(|x| (x - mean).abs()).collect();
    (stats::spearman_lag(y, k), stats::spearman_lag(&v, k))
}

/// Model and empirical dependence metrics for one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceReport {
    pub lags: Vec<usize>,
    pub rho_y: Vec<f64>,
    pub rho_v: Vec<f64>,
    pub rho_y_se: Vec<Option<f64>>,
    pub rho_v_se: Vec<Option<f64>>,
    pub quantile_dependence: Vec<QuantileDependence>,
    pub vol_quantile_dependence: Vec<QuantileDependence>,
    pub tail_dependence: Option<(f64, f64)>,
    pub matrices: Option<DependenceMatrices>,
}

#[cfg(test)]
mod tests;
