//! Desk-scale replication studies: lag-one dependence of ARCH(1)/SV(1)
//! series and their mixture-copula fits, quantile dependence of ARCH(3)
//! series and p=3 vine fits, and a small misspecification study of
//! volatility dependence estimates.

use crate::bicop::{Family, PairCopula};
use crate::datagen::{arch1_loglik, simulate_arch, simulate_garch, simulate_sv};
use crate::datagen::{ArchParams, GarchParams, SvParams};
use crate::dvine::DVineSpec;
use crate::error::{Error, Result};
use crate::inference::optim::{nelder_mead, PENALTY};
use crate::inference::{fit_mle, MleOptions};
use crate::margins::{fit_margin, KdeConfig, Margin, MarginModel, ParametricMargin};
use crate::volcop::{empirical_quantile_dependence, empirical_rho, rho_v_lag1, QuantileDependence};
use serde::{Deserialize, Serialize};

/// A benchmark data-generating process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dgp", rename_all = "lowercase")]
pub enum Dgp {
    Arch(ArchParams),
    Garch(GarchParams),
    Sv(SvParams),
}

impl Dgp {
    pub fn simulate(&self, t_len: usize, seed: u64) -> Result<Vec<f64>> {
        match self {
            Dgp::Arch(p) => simulate_arch(p, t_len, seed),
            Dgp::Garch(p) => simulate_garch(p, t_len, seed),
            Dgp::Sv(p) => simulate_sv(p, t_len, seed),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Dgp::Arch(p) => {
                let a: Vec<String> = p.alphas.iter().map(|a| format!("{a}")).collect();
                format!("arch(a0={},a={})", p.alpha0, a.join("/"))
            }
            Dgp::Garch(p) => format!("garch(a0={},a1={},b1={})", p.alpha0, p.alpha1, p.beta1),
            Dgp::Sv(p) => format!("sv(h={},phi={},s2={})", p.h_bar, p.phi1, p.sigma2),
        }
    }
}

/// One pass/fail comparison against a target band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: f64,
    pub tol: f64,
    pub pass: bool,
}

impl Check {
    pub fn within(name: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        Check {
            name: name.into(),
            value,
            target,
            tol,
            pass: (value - target).abs() <= tol,
        }
    }
}

fn fit_univariate(y: &[f64], family: Family, p: usize, kde: &KdeConfig, mle: &MleOptions) -> Result<(MarginModel, DVineSpec)> {
    let margin = fit_margin(y, kde)?;
    let u = margin.pit(y);
    let copula = family.build(&family.independence_params())?;
    let template = DVineSpec::uniform(1, p, copula)?;
    let fit = fit_mle(&template, &u, mle)?;
    Ok((margin, fit.spec))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Case {
    pub dgp: Dgp,
    /// (target, tolerance) for the fitted and the empirical ρᵛ₁; `None`
    /// skips the comparison.
    pub rho_v_fit: Option<(f64, f64)>,
    pub rho_v_emp: Option<(f64, f64)>,
}

/// Bound on |ρʸ₁| for every fitted and empirical value.
pub const RHO_Y_BOUND: f64 = 0.02;

/// MLE settings for the studies: they only use point estimates, so the
/// finite-difference Hessian is skipped.
fn point_estimate() -> MleOptions {
    MleOptions { hessian_max_dim: 0, ..MleOptions::default() }
}

pub fn table2_cases() -> Vec<Table2Case> {
    let arch = |a1: f64| Dgp::Arch(ArchParams { alpha0: 0.01, alphas: vec![a1] });
    let sv = |phi1: f64, sigma2: f64| Dgp::Sv(SvParams { h_bar: 0.8, phi1, sigma2 });
    vec![
        Table2Case { dgp: arch(0.5), rho_v_fit: Some((0.241, 0.04)), rho_v_emp: Some((0.240, 0.02)) },
        Table2Case { dgp: arch(0.9), rho_v_fit: Some((0.393, 0.06)), rho_v_emp: Some((0.371, 0.02)) },
        Table2Case { dgp: sv(0.5, 2.5), rho_v_fit: Some((0.186, 0.06)), rho_v_emp: Some((0.230, 0.02)) },
        Table2Case { dgp: sv(0.9, 2.0), rho_v_fit: Some((0.395, 0.06)), rho_v_emp: Some((0.453, 0.02)) },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Config {
    pub t_len: usize,
    pub seed: u64,
    pub family: Family,
    pub kde: KdeConfig,
    pub mle: MleOptions,
}

impl Default for Table2Config {
    fn default() -> Self {
        Table2Config {
            t_len: 50_000,
            seed: 42,
            family: Family::MixtureT,
            kde: KdeConfig::default(),
            mle: point_estimate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Row {
    pub dgp: Dgp,
    pub label: String,
    pub model: DVineSpec,
    pub rho_v_fit: f64,
    pub rho_v_emp: f64,
    pub rho_y_fit: f64,
    pub rho_y_emp: f64,
    pub checks: Vec<Check>,
}

impl Table2Row {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Simulates one process, fits a margin and a p=1 mixture copula, and
/// compares lag-one Spearman correlations of the fit and of the data.
pub fn table2_case(case: &Table2Case, cfg: &Table2Config) -> Result<Table2Row> {
    let y = case.dgp.simulate(cfg.t_len, cfg.seed)?;
    let (margin, spec) = fit_univariate(&y, cfg.family, 1, &cfg.kde, &cfg.mle)?;
    let rho_v_fit = rho_v_lag1(&spec, &margin)?;
    let rho_y_fit = spec.pairs()[0].spearman_rho();
    let (rho_y_emp, rho_v_emp) = empirical_rho(&y, 1);
    let mut checks = Vec::new();
    if let Some((t, tol)) = case.rho_v_fit {
        checks.push(Check::within("rho_v_fit", rho_v_fit, t, tol));
    }
    if let Some((t, tol)) = case.rho_v_emp {
        checks.push(Check::within("rho_v_emp", rho_v_emp, t, tol));
    }
    checks.push(Check::within("rho_y_fit", rho_y_fit, 0.0, RHO_Y_BOUND));
    checks.push(Check::within("rho_y_emp", rho_y_emp, 0.0, RHO_Y_BOUND));
    Ok(Table2Row {
        label: case.dgp.label(),
        dgp: case.dgp.clone(),
        model: spec,
        rho_v_fit,
        rho_v_emp,
        rho_y_fit,
        rho_y_emp,
        checks,
    })
}

pub fn table2(cfg: &Table2Config) -> Result<Vec<Table2Row>> {
    table2_cases().iter().map(|c| table2_case(c, cfg)).collect()
}

/// Levels 0.05, 0.10, …, 0.95.
pub fn alpha_grid() -> Vec<f64> {
    (1..=19).map(|i| i as f64 * 0.05).collect()
}

pub fn arch3_cases() -> Vec<ArchParams> {
    [[0.2, 0.2, 0.2], [0.3, 0.2, 0.2], [0.5, 0.2, 0.2]]
        .iter()
        .map(|a| ArchParams { alpha0: 0.01, alphas: a.to_vec() })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arch3Config {
    pub t_len: usize,
    pub seed: u64,
    pub cases: Vec<ArchParams>,
    pub family: Family,
    pub order: usize,
    /// Length of the series simulated from each fitted vine.
    pub sim_len: usize,
    pub alphas: Vec<f64>,
    pub tol: f64,
    pub kde: KdeConfig,
    pub mle: MleOptions,
}

impl Default for Arch3Config {
    fn default() -> Self {
        Arch3Config {
            t_len: 50_000,
            seed: 42,
            cases: arch3_cases(),
            family: Family::MixtureT,
            order: 3,
            sim_len: 200_000,
            alphas: alpha_grid(),
            tol: 0.03,
            kde: KdeConfig::default(),
            mle: point_estimate(),
        }
    }
}

/// Quantile-dependence curves of one lag: model (from a long simulated
/// path of the fitted vine) against the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagCurves {
    pub lag: usize,
    pub model: Vec<QuantileDependence>,
    pub empirical: Vec<QuantileDependence>,
}

impl LagCurves {
    /// Largest gap between the lower curve for α ≤ 0.5 and the upper curve
    /// for α ≥ 0.5, the halves that are informative about each tail.
    pub fn max_gap(&self) -> f64 {
        self.model
            .iter()
            .zip(&self.empirical)
            .map(|(m, e)| {
                let lo = if m.alpha <= 0.5 + 1e-12 { (m.low - e.low).abs() } else { 0.0 };
                let up = if m.alpha >= 0.5 - 1e-12 { (m.up - e.up).abs() } else { 0.0 };
                lo.max(up)
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arch3Result {
    pub params: ArchParams,
    pub model: DVineSpec,
    pub curves: Vec<LagCurves>,
    pub max_gap: f64,
    pub pass: bool,
}

pub fn arch3_case(params: &ArchParams, cfg: &Arch3Config) -> Result<Arch3Result> {
    let y = simulate_arch(params, cfg.t_len, cfg.seed)?;
    let (_, spec) = fit_univariate(&y, cfg.family, cfg.order, &cfg.kde, &cfg.mle)?;
    let sim = spec.simulate(cfg.sim_len, cfg.seed.wrapping_add(1))?;
    let curves: Vec<LagCurves> = (1..=cfg.order)
        .map(|k| LagCurves {
            lag: k,
            model: empirical_quantile_dependence(&sim, k, &cfg.alphas),
            empirical: empirical_quantile_dependence(&y, k, &cfg.alphas),
        })
        .collect();
    let max_gap = curves.iter().map(LagCurves::max_gap).fold(0.0, f64::max);
    Ok(Arch3Result {
        params: params.clone(),
        model: spec,
        curves,
        max_gap,
        pass: max_gap <= cfg.tol,
    })
}

pub fn arch3(cfg: &Arch3Config) -> Result<Vec<Arch3Result>> {
    cfg.cases.iter().map(|p| arch3_case(p, cfg)).collect()
}

/// Gaussian ARCH(1) maximum likelihood, conditional on the first value.
pub fn fit_arch1(y: &[f64]) -> Result<ArchParams> {
    if y.len() < 10 {
        return Err(Error::param("ARCH(1) fit needs at least 10 observations"));
    }
    let n = y.len() as f64;
    let var = y.iter().map(|v| v * v).sum::<f64>() / n;
    let to_params = |z: &[f64]| (z[0].exp(), 1.0 / (1.0 + (-z[1]).exp()));
    let obj = |z: &[f64]| {
        let (a0, a1) = to_params(z);
        let ll = arch1_loglik(a0, a1, y);
        if ll.is_finite() {
            -ll / n
        } else {
            PENALTY
        }
    };
    let z0 = [(0.7 * var).ln(), (0.3f64 / 0.7).ln()];
    let res = nelder_mead(&obj, &z0, 0.5, 2000, 1e-12);
    let (a0, a1) = to_params(&res.z);
    if !res.converged {
        return Err(Error::Fit("ARCH(1) simplex did not converge".into()));
    }
    // a1 can only approach 1 in the limit; keep the process stationary
    ArchParams::new(a0, vec![a1.min(1.0 - 1e-9)])
}

/// Sample lag-k Spearman of |y - ȳ| for k = 1..=lags.
pub fn series_rho_v(y: &[f64], lags: usize) -> Vec<f64> {
    (1..=lags).map(|k| empirical_rho(y, k).1).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimstudyConfig {
    pub replicates: usize,
    pub t_len: usize,
    /// Length of the series simulated from every fitted and true model.
    pub sim_len: usize,
    pub lags: usize,
    pub seed: u64,
    pub arch: ArchParams,
    pub copula: PairCopula,
    pub copula_margin: ParametricMargin,
    pub kde: KdeConfig,
    pub mle: MleOptions,
}

impl Default for SimstudyConfig {
    fn default() -> Self {
        SimstudyConfig {
            replicates: 10,
            t_len: 3669,
            sim_len: 1_000_000,
            lags: 5,
            seed: 42,
            arch: ArchParams { alpha0: 0.3, alphas: vec![0.3] },
            copula: PairCopula::mixture_convex_gumbel(0.5, 0.2, 0.5, 0.2, 0.5)
                .expect("valid parameters"),
            copula_margin: ParametricMargin::StudentT { loc: 0.0, scale: 0.5, nu: 4.0 },
            kde: KdeConfig::default(),
            mle: point_estimate(),
        }
    }
}

/// Per-replicate ρᵛ_k estimates of the two fitted models on one true model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimstudyArm {
    pub truth: String,
    pub true_rho_v: Vec<f64>,
    /// estimates[r][k-1] from the correctly specified fit.
    pub correct: Vec<Vec<f64>>,
    pub misspecified: Vec<Vec<f64>>,
    pub rmse_correct: Vec<f64>,
    pub rmse_misspecified: Vec<f64>,
    /// RMSE of the misspecified fit over that of the correct fit, per lag.
    pub ratio: Vec<f64>,
    /// Median over replicates of |error misspecified| / |error correct|.
    pub median_ratio: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimstudyResult {
    /// True ARCH(1); copula fit is misspecified.
    pub arch_truth: SimstudyArm,
    /// True Copula B1; ARCH(1) fit is misspecified.
    pub copula_truth: SimstudyArm,
    /// Lag-one ratio of the copula-on-ARCH arm is below that of the
    /// ARCH-on-copula arm.
    pub pass: bool,
}

fn rmse(est: &[Vec<f64>], truth: &[f64]) -> Vec<f64> {
    (0..truth.len())
        .map(|k| {
            let s: f64 = est.iter().map(|e| (e[k] - truth[k]).powi(2)).sum();
            (s / est.len() as f64).sqrt()
        })
        .collect()
}

fn median(mut x: Vec<f64>) -> f64 {
    x.sort_by(f64::total_cmp);
    crate::stats::quantile_sorted(&x, 0.5)
}

fn arm(truth: String, true_rho_v: Vec<f64>, correct: Vec<Vec<f64>>, misspecified: Vec<Vec<f64>>) -> SimstudyArm {
    let rmse_correct = rmse(&correct, &true_rho_v);
    let rmse_misspecified = rmse(&misspecified, &true_rho_v);
    let ratio = rmse_misspecified
        .iter()
        .zip(&rmse_correct)
        .map(|(a, b)| a / b)
        .collect();
    let median_ratio = (0..true_rho_v.len())
        .map(|k| {
            median(
                correct
                    .iter()
                    .zip(&misspecified)
                    .map(|(c, m)| (m[k] - true_rho_v[k]).abs() / (c[k] - true_rho_v[k]).abs())
                    .collect(),
            )
        })
        .collect();
    SimstudyArm {
        truth,
        true_rho_v,
        correct,
        misspecified,
        rmse_correct,
        rmse_misspecified,
        ratio,
        median_ratio,
    }
}

/// ρᵛ_1..ρᵛ_lags of a fitted Copula B1 model and of a fitted ARCH(1) on y.
fn fitted_rho_v(y: &[f64], cfg: &SimstudyConfig, seed: u64) -> Result<(Vec<f64>, Vec<f64>)> {
    let (margin, spec) = fit_univariate(y, Family::MixtureConvexGumbel, 1, &cfg.kde, &cfg.mle)?;
    let u = spec.simulate(cfg.sim_len, seed)?;
    let ys: Vec<f64> = u.iter().map(|&v| margin.quantile(v)).collect();
    let copula = series_rho_v(&ys, cfg.lags);
    let arch = fit_arch1(y)?;
    let ya = simulate_arch(&arch, cfg.sim_len, seed)?;
    Ok((copula, series_rho_v(&ya, cfg.lags)))
}

pub fn simstudy(cfg: &SimstudyConfig) -> Result<SimstudyResult> {
    if cfg.replicates < 2 {
        return Err(Error::param("simulation study needs at least two replicates"));
    }
    let truth_seed = cfg.seed.wrapping_mul(1000).wrapping_add(999);
    let copula_spec = DVineSpec::univariate(vec![cfg.copula.clone()])?;
    let copula_series = |len: usize, seed: u64| -> Result<Vec<f64>> {
        Ok(copula_spec
            .simulate(len, seed)?
            .into_iter()
            .map(|u| cfg.copula_margin.quantile(u))
            .collect())
    };
    let arch_true = series_rho_v(&simulate_arch(&cfg.arch, cfg.sim_len, truth_seed)?, cfg.lags);
    let copula_true = series_rho_v(&copula_series(cfg.sim_len, truth_seed)?, cfg.lags);

    let (mut a_cop, mut a_arch, mut c_cop, mut c_arch) = (vec![], vec![], vec![], vec![]);
    for r in 0..cfg.replicates {
        let seed = cfg.seed.wrapping_mul(1000).wrapping_add(r as u64);
        let y = simulate_arch(&cfg.arch, cfg.t_len, seed)?;
        let (cop, arch) = fitted_rho_v(&y, cfg, seed.wrapping_add(500))?;
        a_cop.push(cop);
        a_arch.push(arch);
        let y = copula_series(cfg.t_len, seed)?;
        let (cop, arch) = fitted_rho_v(&y, cfg, seed.wrapping_add(500))?;
        c_cop.push(cop);
        c_arch.push(arch);
    }
    let arch_truth = arm(cfg.arch_label(), arch_true, a_arch, a_cop);
    let copula_truth = arm("copula_b1".into(), copula_true, c_cop, c_arch);
    let pass = arch_truth.ratio[0] < copula_truth.ratio[0];
    Ok(SimstudyResult {
        arch_truth,
        copula_truth,
        pass,
    })
}

impl SimstudyConfig {
    fn arch_label(&self) -> String {
        Dgp::Arch(self.arch.clone()).label()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arch1_fit_recovers_parameters() {
        let p = ArchParams::new(0.01, vec![0.5]).unwrap();
        let y = simulate_arch(&p, 20_000, 3).unwrap();
        let f = fit_arch1(&y).unwrap();
        assert!((f.alpha0 - 0.01).abs() < 0.001, "{f:?}");
        assert!((f.alphas[0] - 0.5).abs() < 0.05, "{f:?}");
    }

    #[test]
    fn arch1_fit_beats_neighbours() {
        let p = ArchParams::new(0.3, vec![0.3]).unwrap();
        let y = simulate_arch(&p, 3000, 9).unwrap();
        let f = fit_arch1(&y).unwrap();
        let best = arch1_loglik(f.alpha0, f.alphas[0], &y);
        for (da, db) in [(1.01, 0.0), (0.99, 0.0), (1.0, 0.01), (1.0, -0.01)] {
            assert!(arch1_loglik(f.alpha0 * da, f.alphas[0] + db, &y) <= best + 1e-9);
        }
    }

    #[test]
    fn rmse_ratio_arithmetic() {
        let a = arm(
            "x".into(),
            vec![0.1],
            vec![vec![0.11], vec![0.09]],
            vec![vec![0.14], vec![0.06]],
        );
        assert!((a.rmse_correct[0] - 0.01).abs() < 1e-12);
        assert!((a.ratio[0] - 4.0).abs() < 1e-9);
        assert!((a.median_ratio[0] - 4.0).abs() < 1e-9);
    }

    #[test]
    fn lag_curve_gap_uses_tail_halves() {
        let q = |alpha, low, up| QuantileDependence { alpha, low, up, low_up: 0.0, up_low: 0.0 };
        let c = LagCurves {
            lag: 1,
            model: vec![q(0.1, 0.2, 0.9), q(0.9, 0.9, 0.3)],
            empirical: vec![q(0.1, 0.25, 0.5), q(0.9, 0.1, 0.31)],
        };
        assert!((c.max_gap() - 0.05).abs() < 1e-12);
    }

    #[test]
    fn check_band() {
        assert!(Check::within("a", 0.25, 0.24, 0.02).pass);
        assert!(!Check::within("a", 0.27, 0.24, 0.02).pass);
    }

    #[test]
    fn table2_case_small_run() {
        let cfg = Table2Config {
            t_len: 3000,
            mle: MleOptions { starts: 2, polish_iters: 300, ..MleOptions::default() },
            ..Table2Config::default()
        };
        let case = Table2Case { dgp: table2_cases()[0].dgp.clone(), rho_v_fit: None, rho_v_emp: None };
        let row = table2_case(&case, &cfg).unwrap();
        assert!(row.rho_v_fit > 0.1 && row.rho_v_emp > 0.1);
        assert_eq!(row.checks.len(), 2);
    }
}
