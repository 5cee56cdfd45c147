//! Maximum likelihood for D-vine copulas.
//!
//! Pairs are first estimated one at a time in the order of the argument
//! recursion: every pair sits in exactly one column of the conditional
//! grid, and its arguments there depend only on the pairs of earlier
//! columns. Each pair gets a multi-start simplex search. The sequential
//! estimate then seeds a joint simplex search over all parameters.

use super::optim::{nelder_mead, NmResult, PENALTY};
use super::transform::ParamTransform;
use super::{FitReport, Method, ParamSummary};
use crate::bicop::Family;
use crate::dvine::{loglik_value, DVineSpec};
use crate::error::{Error, Result};
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// z-value of a two-sided 90% normal interval.
const Z90: f64 = 1.644_853_626_951_472_2;

/// Minimum number of terms used to screen starting points.
const SCREEN_MIN: usize = 2000;

/// |z| beyond which a parameter is treated as sitting on its bound when
/// inverting the Hessian.
const Z_EDGE: f64 = 8.0;

/// Relative curvature below which a direction counts as flat.
const FLAT: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleOptions {
    /// Starting points per pair in the sequential stage.
    pub starts: usize,
    /// Simplex iterations per start.
    pub start_iters: u64,
    /// Simplex iterations for the best start and for the joint search.
    pub polish_iters: u64,
    /// Standard-deviation tolerance of the simplex on the per-observation
    /// negative log-likelihood.
    pub tol: f64,
    /// Joint search is skipped above this many parameters.
    pub joint_max_dim: usize,
    /// Finite-difference standard errors are skipped above this many
    /// parameters.
    pub hessian_max_dim: usize,
    pub seed: u64,
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions {
            starts: 5,
            start_iters: 150,
            polish_iters: 1500,
            tol: 1e-10,
            joint_max_dim: 25,
            hessian_max_dim: 30,
            seed: 1,
        }
    }
}

/// Result of `fit_mle`: the fitted vine and its report.
#[derive(Debug, Clone)]
pub struct MleFit {
    pub spec: DVineSpec,
    pub report: FitReport,
}

/// Central starting point for a family.
pub fn default_start(family: Family) -> Vec<f64> {
    match family {
        Family::Independence => vec![],
        Family::Gaussian => vec![0.2],
        Family::T => vec![0.2, 10.0],
        Family::Gumbel => vec![0.2],
        Family::ConvexGumbel => vec![0.2, 0.5],
        Family::MixtureT => vec![0.5, 0.5, 10.0, 0.5, 10.0],
        Family::MixtureConvexGumbel => vec![0.5, 0.3, 0.5, 0.3, 0.5],
    }
}

fn start_points(family: Family, n: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let tr = ParamTransform::new(family.bounds());
    let base = default_start(family);
    let z0 = tr.to_unconstrained(&base);
    let mut out = vec![z0.clone()];
    if n > 1 && matches!(family, Family::MixtureT | Family::MixtureConvexGumbel) {
        // the other labelling of the two components
        let mut x = base.clone();
        x[0] = 1.0 - x[0];
        x.swap(1, 3);
        x.swap(2, 4);
        x[1] = 0.8;
        x[3] = 0.2;
        out.push(tr.to_unconstrained(&x));
    }
    while out.len() < n {
        out.push(
            z0.iter()
                .map(|z| {
                    let e: f64 = StandardNormal.sample(rng);
                    z + 1.5 * e
                })
                .collect(),
        );
    }
    out
}

/// Starts are screened on a leading subsample; the best one is then run
/// to convergence on all terms.
fn multi_start(family: Family, data: &PairData, starts: &[Vec<f64>], opts: &MleOptions) -> NmResult {
    let screen_len = (data.len() / 4).max(SCREEN_MIN).min(data.len());
    let screen = data.prefix(screen_len);
    let fs = pair_objective(family, &screen);
    let trials: Vec<NmResult> = starts
        .par_iter()
        .map(|z| nelder_mead(&fs, z, 1.0, opts.start_iters, opts.tol))
        .collect();
    let evals: usize = trials.iter().map(|t| t.evals).sum();
    let best = trials
        .into_iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .expect("at least one start");
    let f = pair_objective(family, data);
    let mut polished = nelder_mead(&f, &best.z, 0.25, opts.polish_iters, opts.tol);
    polished.evals += evals;
    polished
}

/// Argument pairs (first, second) seen by each pair in its column.
fn column_arguments(spec: &DVineSpec, u: &[f64]) -> Vec<Vec<(f64, f64)>> {
    let n = u.len();
    let mut args = vec![Vec::new(); spec.pairs().len()];
    let mut prev1 = u.to_vec();
    let mut prev2 = u.to_vec();
    for r in 1..=spec.depth().min(n - 1) {
        let mut next1 = vec![f64::NAN; n];
        let mut next2 = vec![f64::NAN; n];
        for ii in r..n {
            match spec.stacked_pair_index(ii + 1, r) {
                Some(idx) => {
                    let (a, b) = (prev2[ii - 1], prev1[ii]);
                    args[idx].push((a, b));
                    let (_, h1, h2) = spec.pairs()[idx].eval_all(a, b);
                    next1[ii] = h1;
                    next2[ii] = h2;
                }
                None => {
                    next1[ii] = prev1[ii];
                    next2[ii] = prev2[ii - 1];
                }
            }
        }
        prev1 = next1;
        prev2 = next2;
    }
    args
}

/// Data seen by one pair: either a chain u_1..u_n whose consecutive values
/// form the argument pairs, or a general list of pairs.
enum PairData {
    Chain(Vec<f64>),
    Pairs(Vec<(f64, f64)>),
}

impl PairData {
    fn new(args: &[(f64, f64)]) -> Self {
        let chained = args.windows(2).all(|w| w[0].1.to_bits() == w[1].0.to_bits());
        if chained && !args.is_empty() {
            let mut c = vec![args[0].0];
            c.extend(args.iter().map(|a| a.1));
            PairData::Chain(c)
        } else {
            PairData::Pairs(args.to_vec())
        }
    }

    fn len(&self) -> usize {
        match self {
            PairData::Chain(c) => c.len().saturating_sub(1),
            PairData::Pairs(p) => p.len(),
        }
    }

    /// Leading part with about `terms` argument pairs.
    fn prefix(&self, terms: usize) -> PairData {
        match self {
            PairData::Chain(c) => PairData::Chain(c[..(terms + 1).min(c.len())].to_vec()),
            PairData::Pairs(p) => PairData::Pairs(p[..terms.min(p.len())].to_vec()),
        }
    }

    fn loglik(&self, c: &crate::bicop::PairCopula) -> f64 {
        match self {
            PairData::Chain(u) => DVineSpec::univariate(vec![c.clone()])
                .and_then(|s| loglik_value(&s, u))
                .unwrap_or(f64::NEG_INFINITY),
            PairData::Pairs(p) => p
                .par_iter()
                .map(|&(a, b)| c.ln_density(a, b).unwrap_or(f64::NEG_INFINITY))
                .sum(),
        }
    }
}

fn pair_objective(family: Family, data: &PairData) -> impl Fn(&[f64]) -> f64 + Sync + '_ {
    let tr = ParamTransform::new(family.bounds());
    let n = data.len().max(1) as f64;
    move |z: &[f64]| match family.build(&tr.to_constrained(z)) {
        Ok(c) => -data.loglik(&c) / n,
        Err(_) => PENALTY,
    }
}

/// Sequential pair-by-pair estimate.
fn sequential(template: &DVineSpec, u: &[f64], opts: &MleOptions) -> Result<(DVineSpec, usize)> {
    let mut spec = template.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut evals = 0;
    // pairs are finalized column by column, so arguments are recomputed
    // after each column with the pairs estimated so far
    let n = u.len();
    let mut done = vec![false; spec.pairs().len()];
    for r in 1..=spec.depth().min(n - 1) {
        let args = column_arguments(&spec, u);
        let in_column: Vec<usize> = (r..n)
            .filter_map(|ii| spec.stacked_pair_index(ii + 1, r))
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        for idx in in_column {
            if done[idx] {
                continue;
            }
            done[idx] = true;
            let family = spec.pairs()[idx].family();
            if family.param_names().is_empty() {
                continue;
            }
            let data = PairData::new(&args[idx]);
            let starts = start_points(family, opts.starts.max(1), &mut rng);
            let best = multi_start(family, &data, &starts, opts);
            evals += best.evals;
            let tr = ParamTransform::new(family.bounds());
            spec.pairs_mut()[idx] = family.build(&tr.to_constrained(&best.z))?;
        }
    }
    Ok((spec, evals))
}

/// Central finite-difference Hessian of `f` at `z`.
pub(crate) fn fd_hessian<F: Fn(&[f64]) -> f64 + Sync>(f: &F, z: &[f64], h: f64) -> DMatrix<f64> {
    let d = z.len();
    let f0 = f(z);
    let at = |moves: &[(usize, f64)]| {
        let mut p = z.to_vec();
        for &(i, s) in moves {
            p[i] += s;
        }
        f(&p)
    };
    let cells: Vec<(usize, usize)> = (0..d).flat_map(|i| (i..d).map(move |j| (i, j))).collect();
    let vals: Vec<f64> = cells
        .par_iter()
        .map(|&(i, j)| {
            if i == j {
                (at(&[(i, h)]) - 2.0 * f0 + at(&[(i, -h)])) / (h * h)
            } else {
                (at(&[(i, h), (j, h)]) - at(&[(i, h), (j, -h)]) - at(&[(i, -h), (j, h)])
                    + at(&[(i, -h), (j, -h)]))
                    / (4.0 * h * h)
            }
        })
        .collect();
    let mut m = DMatrix::zeros(d, d);
    for (&(i, j), v) in cells.iter().zip(vals) {
        m[(i, j)] = v;
        m[(j, i)] = v;
    }
    m
}

/// Natural-scale standard errors from the Hessian of -loglik in z.
/// Parameters pressed against a bound, or along which the likelihood is
/// numerically flat, are held fixed (no standard error) and the remaining
/// block is inverted.
fn standard_errors(tr: &ParamTransform, z: &[f64], hess: &DMatrix<f64>) -> Vec<Option<f64>> {
    let d = z.len();
    let top = (0..d).map(|i| hess[(i, i)]).fold(0.0, f64::max);
    let free: Vec<usize> = (0..d)
        .filter(|&i| z[i].abs() < Z_EDGE && hess[(i, i)] > FLAT * top)
        .collect();
    let sub = DMatrix::from_fn(free.len(), free.len(), |a, b| hess[(free[a], free[b])]);
    let mut out = vec![None; d];
    let Some(chol) = sub.cholesky() else {
        return out;
    };
    let cov = chol.inverse();
    let jac = tr.jacobian(z);
    for (a, &i) in free.iter().enumerate() {
        let v = cov[(a, a)];
        if v.is_finite() && v > 0.0 {
            out[i] = Some(jac[i] * v.sqrt());
        }
    }
    out
}

/// Parameter table for `spec`, with optional standard errors.
pub(crate) fn param_table(spec: &DVineSpec, ses: &[Option<f64>]) -> Vec<ParamSummary> {
    let labels = spec.labels();
    let mut out = Vec::new();
    let mut off = 0;
    for (idx, c) in spec.pairs().iter().enumerate() {
        let fam = c.family();
        let (k, l1, l2) = labels[idx];
        for ((name, x), b) in fam.param_names().iter().zip(c.params()).zip(fam.bounds()) {
            let se = ses.get(off).copied().flatten();
            let (lower, upper) = match se {
                Some(s) => ((x - Z90 * s).max(b.lo), (x + Z90 * s).min(b.hi)),
                None => (x, x),
            };
            out.push(ParamSummary {
                pair: idx,
                k,
                l1,
                l2,
                name: name.to_string(),
                estimate: x,
                se,
                lower,
                upper,
            });
            off += 1;
        }
    }
    out
}

/// Maximum likelihood fit of the pair-copula parameters of `template`
/// (families and structure are kept) to stacked copula data `u`.
pub fn fit_mle(template: &DVineSpec, u: &[f64], opts: &MleOptions) -> Result<MleFit> {
    let n = u.len();
    if n < 2 * template.m() {
        return Err(Error::param("need at least two time points"));
    }
    // validates the data and the template
    loglik_value(template, u)?;

    let (seq_spec, mut evals) = sequential(template, u, opts)?;
    let tr = ParamTransform::for_spec(template);
    let d = tr.dim();
    let nobs = n as f64;
    let objective = |z: &[f64]| match tr.spec_at(template, z) {
        Ok(s) => loglik_value(&s, u).map(|ll| -ll / nobs).unwrap_or(PENALTY),
        Err(_) => PENALTY,
    };

    let z_seq = tr.to_unconstrained(&seq_spec.params_flat());
    let mut z = z_seq.clone();
    let mut value = objective(&z);
    let mut converged = true;
    // with a single parameterized pair the sequential fit is already joint
    let blocks = template.pairs().iter().filter(|c| !c.family().param_names().is_empty()).count();
    if blocks > 1 && d <= opts.joint_max_dim {
        let joint = nelder_mead(&objective, &z_seq, 0.1, opts.polish_iters, opts.tol);
        evals += joint.evals;
        converged = joint.converged;
        if joint.value <= value {
            z = joint.z;
            value = joint.value;
        }
    }
    if !(value < PENALTY) {
        return Err(Error::Fit("no feasible parameter vector found".into()));
    }
    let spec = tr.spec_at(template, &z)?;
    let loglik = -value * nobs;

    let ses = if d > 0 && d <= opts.hessian_max_dim {
        let total = |z: &[f64]| objective(z) * nobs;
        let hess = fd_hessian(&total, &z, 1e-3);
        standard_errors(&tr, &z, &hess)
    } else {
        vec![None; d]
    };
    let params = param_table(&spec, &ses);
    Ok(MleFit {
        report: FitReport {
            method: Method::Mle,
            model: spec.clone(),
            loglik,
            n_obs: n,
            params,
            metrics: Vec::new(),
            converged,
            evaluations: evals,
            loglik_trace: Vec::new(),
            acceptance: Vec::new(),
            dic2: None,
        },
        spec,
    })
}
