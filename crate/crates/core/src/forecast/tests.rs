use super::*;
use crate::bicop::PairCopula;
use crate::datagen::{simulate_arch, ArchParams};
use crate::margins::ParametricMargin;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};

fn fig1_spec() -> DVineSpec {
    DVineSpec::univariate(vec![PairCopula::mixture_t(0.5, 0.9, 3.0, 0.9, 3.0).unwrap()]).unwrap()
}

#[test]
fn independence_predictive_is_margin() {
    let spec = DVineSpec::independence(1, 2);
    let m = ParametricMargin::StudentT { loc: 0.1, scale: 2.0, nu: 5.0 };
    let hist = [0.3, -1.2, 4.0];
    for &y in &[-3.0, -0.5, 0.0, 0.7, 2.5] {
        let f = predictive_cdf_uni(&spec, &m, &hist, y).unwrap();
        assert!((f - m.cdf(y)).abs() < 1e-12);
    }
}

#[test]
fn predictive_matches_simulated_next_step() {
    let spec = fig1_spec();
    let m = ParametricMargin::standard_normal();
    let hist = [0.4, -2.1];
    let pred = UniPredictive::new(&spec, &m, &hist).unwrap();
    let state = VineState::from_history(&spec, &m.pit(&hist)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 100_000;
    let mut draws: Vec<f64> = (0..n)
        .map(|_| {
            let mut st = state.clone();
            let u = st.step(&spec, crate::bicop::open_uniform(&mut rng)).unwrap();
            m.quantile(u)
        })
        .collect();
    draws.sort_by(f64::total_cmp);
    for d in 1..10 {
        let y = stats::quantile_sorted(&draws, d as f64 / 10.0);
        let emp = draws.partition_point(|&x| x <= y) as f64 / n as f64;
        assert!((pred.cdf(y) - emp).abs() < 0.01, "decile {d}");
    }
}

#[test]
fn predictive_is_monotone_and_invertible() {
    let spec = fig1_spec();
    let m = ParametricMargin::standard_normal();
    let pred = UniPredictive::new(&spec, &m, &[1.7]).unwrap();
    let mut prev = 0.0;
    for i in 0..100 {
        let y = -4.0 + 8.0 * i as f64 / 99.0;
        let f = pred.cdf(y);
        assert!(f >= prev);
        prev = f;
    }
    let mut last = f64::NEG_INFINITY;
    for &a in &DEFAULT_ALPHAS {
        let q = pred.quantile(a).unwrap();
        assert!(q > last);
        last = q;
        assert!((pred.cdf(q) - a).abs() < 1e-7);
    }
    assert!(pred.quantile(1.0).is_err());
}

/// Walks the day sequence and sums per-day log probabilities.
fn seq_loglik(hits: &[bool], p0: f64, p1: f64, markov: bool) -> f64 {
    let mut ll = 0.0;
    for t in 0..hits.len() {
        if markov && t == 0 {
            continue;
        }
        let p = if markov && hits[t - 1] { p1 } else { p0 };
        ll += if hits[t] { p.ln() } else { (1.0 - p).ln() };
    }
    ll
}

#[test]
fn lr_statistics_match_direct_likelihood() {
    // 0 (1 0 …) with 50 isolated exceedances: n00=900, n01=50, n10=50, n11=0
    let mut hits = vec![false; 1001];
    for j in 0..50 {
        hits[1 + 20 * j] = true;
    }
    let alpha = 0.05;
    let r = backtest_indicators(&hits, alpha).unwrap();
    assert_eq!((r.n00, r.n01, r.n10, r.n11), (900, 50, 50, 0));

    let n1 = hits.iter().filter(|&&h| h).count() as f64;
    let pi = n1 / hits.len() as f64;
    let uc = -2.0 * (seq_loglik(&hits, alpha, alpha, false) - seq_loglik(&hits, pi, pi, false));
    assert!((r.lr_uc - uc).abs() < 1e-10);

    let (p0, p1): (f64, f64) = (50.0 / 950.0, 0.0);
    let pt: f64 = 50.0 / 1000.0;
    let mut ind_alt = 0.0;
    let mut ind_null = 0.0;
    for t in 1..hits.len() {
        let p = if hits[t - 1] { p1 } else { p0 };
        ind_alt += if hits[t] { f64::ln(p) } else { (1.0 - p).ln() };
        ind_null += if hits[t] { pt.ln() } else { (1.0 - pt).ln() };
    }
    let ind = -2.0 * (ind_null - ind_alt);
    assert!((r.lr_ind.unwrap() - ind).abs() < 1e-10);
    assert!((lr_ind(900, 50, 50, 0) - ind).abs() < 1e-10);
    assert!((r.lr_cc.unwrap() - (uc + ind)).abs() < 1e-10);
    assert!((r.p_cc.unwrap() - (-(uc + ind) / 2.0).exp()).abs() < 1e-12);
}

#[test]
fn lr_vanishes_at_null() {
    assert!(lr_uc(90, 10, 0.1).abs() < 1e-12);
    assert!(lr_ind(81, 9, 9, 1).abs() < 1e-12);
    assert!(lr_ind(100, 100, 100, 100).abs() < 1e-12);
}

#[test]
fn zero_exceedances_are_degenerate() {
    let n = 500;
    let r = backtest_indicators(&vec![false; n], 0.01).unwrap();
    assert!((r.lr_uc - (-2.0 * n as f64 * 0.99f64.ln())).abs() < 1e-10);
    assert!(r.degenerate);
    assert!(r.lr_ind.is_none() && r.lr_cc.is_none());
    assert_eq!(r.alpha_hat, 0.0);
    assert_eq!(r.n00 + r.n01 + r.n10 + r.n11, n - 1);
}

#[test]
fn backtest_rejects_short_or_misaligned_input() {
    assert!(backtest(&[0.0; 50], &[0.0; 50], 0.05).is_err());
    assert!(backtest(&[0.0; 200], &[0.0; 199], 0.05).is_err());
    assert!(backtest(&[0.0; 200], &[0.0; 200], 1.5).is_err());
}

#[test]
fn backtest_invariant_to_monotone_transform() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let y: Vec<f64> = (0..400).map(|_| rng.sample(StandardNormal)).collect();
    let v: Vec<f64> = (0..400).map(|_| -1.6 + 0.3 * rng.random::<f64>()).collect();
    let a = backtest(&y, &v, 0.05).unwrap();
    let ey: Vec<f64> = y.iter().map(|x| x.exp()).collect();
    let ev: Vec<f64> = v.iter().map(|x| x.exp()).collect();
    assert_eq!(a, backtest(&ey, &ev, 0.05).unwrap());
}

#[test]
fn chi2_tails() {
    assert!((chi2_sf_1(3.841458820694124) - 0.05).abs() < 1e-9);
    assert!((chi2_sf_2(5.991464547107979) - 0.05).abs() < 1e-12);
}

#[test]
fn binomial_band_brackets_alpha() {
    for &a in &DEFAULT_ALPHAS {
        let (lo, hi) = binomial_band(3668, a, 0.95);
        assert!(lo < a && a < hi);
    }
}

#[test]
fn true_arch_quantiles_are_calibrated() {
    let p = ArchParams::new(0.01, vec![0.5]).unwrap();
    let y = simulate_arch(&p, 3669, 21).unwrap();
    for &a in &DEFAULT_ALPHAS {
        let var = p.conditional_var(&y, a);
        let r = backtest(&y[1..], &var[1..], a).unwrap();
        let (lo, hi) = binomial_band(r.days, a, 0.95);
        assert!(r.alpha_hat >= lo && r.alpha_hat <= hi, "alpha {a}: {}", r.alpha_hat);
    }
}

#[test]
fn independence_on_iid_is_calibrated() {
    let m = ParametricMargin::standard_normal();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let y: Vec<f64> = (0..3669).map(|_| rng.sample(StandardNormal)).collect();
    let spec = DVineSpec::independence(1, 1);
    let table = rolling_backtest(&spec, &m, &y, &DEFAULT_ALPHAS).unwrap();
    for r in &table {
        assert_eq!(r.days, 3668);
        let (lo, hi) = binomial_band(r.days, r.alpha, 0.95);
        assert!(r.alpha_hat >= lo && r.alpha_hat <= hi);
    }
}

#[test]
fn in_sample_var_matches_history_predictive() {
    let spec = fig1_spec();
    let m = ParametricMargin::standard_normal();
    let y = crate::datagen::simulate_copula_model(&spec, &[&m], 50, 3).unwrap();
    let y: Vec<f64> = y.into_iter().map(|r| r[0]).collect();
    let var = in_sample_var(&spec, &m, &y, &[0.05]).unwrap();
    for t in [1usize, 7, 49] {
        let want = predictive_var(&spec, &m, &y[..t], 0.05).unwrap();
        assert!((var[0][t - 1] - want).abs() < 1e-9);
    }
}

fn gauss3() -> DVineSpec {
    DVineSpec::uniform(3, 1, PairCopula::gaussian(0.4).unwrap()).unwrap()
}

#[test]
fn single_weight_portfolio_is_series_predictive() {
    let spec = gauss3();
    let ms = [
        ParametricMargin::standard_normal(),
        ParametricMargin::StudentT { loc: 0.0, scale: 1.0, nu: 4.0 },
        ParametricMargin::LogNormal { mu: 0.0, sigma: 0.5 },
    ];
    let margins: Vec<&dyn Margin> = ms.iter().map(|m| m as &dyn Margin).collect();
    let hist = vec![vec![0.2, -1.0, 1.4], vec![1.1, 0.3, 0.6]];
    let n = 100_000;
    let port = predictive_portfolio(&spec, &margins, &hist, &[1.0, 0.0, 0.0], n, 4).unwrap();
    let stacked: Vec<f64> = hist
        .iter()
        .flat_map(|r| r.iter().zip(&ms).map(|(x, m)| m.cdf(*x)))
        .collect();
    let st = VineState::from_history(&spec, &stacked).unwrap();
    for &a in &[0.05, 0.5, 0.95] {
        let exact = ms[0].quantile(st.conditional_quantile(&spec, a).unwrap());
        // compare on the probability scale: binomial MC error of the draws
        let f = port.cdf(exact);
        assert!((f - a).abs() < 3.0 * (a * (1.0 - a) / n as f64).sqrt(), "alpha {a}");
    }
}

#[test]
fn independent_portfolio_matches_convolution() {
    let spec = DVineSpec::independence(3, 1);
    let ms = [
        ParametricMargin::standard_normal(),
        ParametricMargin::StudentT { loc: 0.0, scale: 1.0, nu: 3.0 },
        ParametricMargin::LogNormal { mu: 0.0, sigma: 0.5 },
    ];
    let margins: Vec<&dyn Margin> = ms.iter().map(|m| m as &dyn Margin).collect();
    let w = [1.0 / 3.0; 3];
    let n = 100_000;
    let hist = vec![vec![0.0, 0.0, 1.0]];
    let port = predictive_portfolio(&spec, &margins, &hist, &w, n, 9).unwrap();
    let var = port.var(0.05);

    let mut rng = ChaCha8Rng::seed_from_u64(1234);
    let t3 = StudentT::new(3.0).unwrap();
    let below = (0..n)
        .filter(|_| {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = t3.sample(&mut rng);
            let c: f64 = (0.5 * rng.sample::<f64, _>(StandardNormal)).exp();
            (a + b + c) / 3.0 < var
        })
        .count() as f64
        / n as f64;
    let se = (2.0 * 0.05 * 0.95 / n as f64).sqrt();
    assert!((below - 0.05).abs() < 2.0 * se, "{below}");
}

#[test]
fn portfolio_weights_validated() {
    let spec = gauss3();
    let m = ParametricMargin::standard_normal();
    let margins: Vec<&dyn Margin> = vec![&m, &m, &m];
    let hist = vec![vec![0.0; 3]];
    assert!(predictive_portfolio(&spec, &margins, &hist, &[0.5, 0.5, 0.5], 10, 1).is_err());
    assert!(predictive_portfolio(&spec, &margins, &hist, &[0.5, 0.5], 10, 1).is_err());
}

#[test]
fn portfolio_backtest_is_reproducible() {
    let spec = gauss3();
    let m = ParametricMargin::standard_normal();
    let margins: Vec<&dyn Margin> = vec![&m, &m, &m];
    let rows = spec.simulate_rows(150, 2).unwrap();
    let rows: Vec<Vec<f64>> = rows
        .into_iter()
        .map(|r| r.into_iter().map(|u| m.quantile(u)).collect())
        .collect();
    let days: Vec<usize> = (1..150).collect();
    let w = [1.0 / 3.0; 3];
    let a = portfolio_backtest(&spec, &margins, &rows, &w, &[0.05, 0.5], &days, 500, 3).unwrap();
    let b = portfolio_backtest(&spec, &margins, &rows, &w, &[0.05, 0.5], &days, 500, 3).unwrap();
    assert_eq!(a, b);
    assert_eq!(a[0].days, 149);
}
