use super::*;
use crate::margins::ParametricMargin;
use crate::quad::integrate_adaptive;
use rand_distr::{Distribution, StandardNormal};

fn arch05() -> PairCopula {
    PairCopula::mixture_t(0.191, 0.705, 39.996, 0.179, 2.984).unwrap()
}

fn sv09() -> PairCopula {
    PairCopula::mixture_t(0.512, 0.693, 10.740, 0.728, 15.031).unwrap()
}

fn lognormal() -> ParametricMargin {
    ParametricMargin::LogNormal { mu: 0.0, sigma: 0.8 }
}

#[test]
fn normal_fold_is_two_phi_minus_one() {
    let n = ParametricMargin::standard_normal();
    let vm = VolatilityMargin::new(&n);
    assert_eq!(vm.cdf(0.0), 0.0);
    for &v in &[0.1, 0.7, 1.96, 3.5] {
        let want = 2.0 * crate::special::norm_cdf(v) - 1.0;
        assert!((vm.cdf(v) - want).abs() < 1e-15);
    }
}

#[test]
fn uniform_fold_is_linear() {
    let u = ParametricMargin::Uniform { lo: 0.0, hi: 1.0 };
    let vm = VolatilityMargin::new(&u);
    for &v in &[0.05, 0.2, 0.4999] {
        assert!((vm.cdf(v) - 2.0 * v).abs() < 1e-14);
    }
    assert!((vm.quantile(0.3) - 0.15).abs() < 1e-10);
}

#[test]
fn fold_quantile_roundtrip() {
    let ln = lognormal();
    let n = ParametricMargin::standard_normal();
    for m in [&ln as &dyn Margin, &n] {
        let vm = VolatilityMargin::new(m);
        for &q in &[0.1, 0.5, 0.9] {
            assert!((vm.cdf(vm.quantile(q)) - q).abs() < 1e-8);
        }
    }
}

#[test]
fn folded_quantile_does_not_depend_on_v() {
    let ln = lognormal();
    let a = VolatilityMargin::with_transform(&ln, VolTransform::Abs);
    let s = VolatilityMargin::with_transform(&ln, VolTransform::Square);
    for i in 1..50 {
        let q = i as f64 / 50.0;
        assert!((a.folded_quantile(q) - s.folded_quantile(q)).abs() < 1e-10, "q={q}");
    }
}

#[test]
fn independence_base_gives_product() {
    let ln = lognormal();
    let vm = VolatilityMargin::new(&ln);
    let ind = PairCopula::independence();
    for &(a, b) in &[(0.2, 0.3), (0.7, 0.9), (0.5, 0.05)] {
        let c = vol_copula_cdf(&ind, &vm, &vm, a, b).unwrap();
        assert!((c - a * b).abs() < 1e-9);
        let d = vol_copula_density(&ind, &vm, &vm, a, b).unwrap();
        assert!((d - 1.0).abs() < 1e-7);
    }
    assert!(rho_v_symmetric(&ind).abs() < 1e-6);
}

#[test]
fn general_matches_symmetric_form() {
    let n = ParametricMargin::standard_normal();
    let vm = VolatilityMargin::new(&n);
    let base = arch05();
    let grid: Vec<f64> = (1..=20).map(|i| (i as f64 - 0.5) / 20.0).collect();
    let g = vol_copula_cdf_grid(&base, &vm, &vm, &grid, &grid);
    let s = vol_copula_cdf_grid_symmetric(&base, &grid, &grid);
    for (a, b) in g.iter().zip(&s) {
        assert!((a - b).abs() < 1e-8);
    }
    // pointwise paths agree with the grid paths
    let p = vol_copula_cdf(&base, &vm, &vm, grid[3], grid[11]).unwrap();
    assert!((p - g[3 * 20 + 11]).abs() < 1e-9);
    let d = vol_copula_density(&base, &vm, &vm, 0.3, 0.8).unwrap();
    let ds = vol_copula_density_symmetric(&base, 0.3, 0.8).unwrap();
    assert!((d - ds).abs() < 1e-8);
}

#[test]
fn asymmetric_margin_changes_copula() {
    let ln = lognormal();
    let vm = VolatilityMargin::new(&ln);
    let base = sv09();
    let grid: Vec<f64> = (1..=20).map(|i| (i as f64 - 0.5) / 20.0).collect();
    let g = vol_copula_cdf_grid(&base, &vm, &vm, &grid, &grid);
    let s = vol_copula_cdf_grid_symmetric(&base, &grid, &grid);
    let gap = g.iter().zip(&s).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(gap > 1e-3, "max gap {gap}");
}

#[test]
fn vol_copula_has_uniform_margins() {
    let ln = lognormal();
    let vm = VolatilityMargin::new(&ln);
    let base = sv09();
    for i in 1..20 {
        let u = i as f64 / 20.0;
        assert!((vol_copula_cdf(&base, &vm, &vm, u, 1.0).unwrap() - u).abs() < 1e-8);
        assert!((vol_copula_cdf(&base, &vm, &vm, 1.0, u).unwrap() - u).abs() < 1e-8);
        assert!((vol_copula_cdf_symmetric(&base, u, 1.0).unwrap() - u).abs() < 1e-8);
    }
}

#[test]
fn density_integrates_to_one_with_lognormal_margins() {
    let ln = lognormal();
    let vm = VolatilityMargin::new(&ln);
    let base = arch05();
    let (total, _) = integrate_adaptive(
        |a| integrate_adaptive(|b| vol_copula_density(&base, &vm, &vm, a, b).unwrap(), 0.0, 1.0, 1e-7).0,
        0.0,
        1.0,
        1e-6,
    );
    assert!((total - 1.0).abs() < 1e-3, "{total}");
}

#[test]
fn rho_v_reference_values() {
    let a = rho_v_symmetric(&arch05());
    assert!((a - 0.241).abs() < 0.02, "arch 0.5: {a}");
    let s = rho_v_symmetric(&sv09());
    assert!((s - 0.395).abs() < 0.03, "sv 0.9: {s}");
    // general path with symmetric margins agrees with the margin-free path
    let n = ParametricMargin::standard_normal();
    let spec = DVineSpec::univariate(vec![arch05()]).unwrap();
    assert!((rho_v_lag1(&spec, &n).unwrap() - a).abs() < 1e-8);
}

#[test]
fn gaussian_vol_copula_matches_monte_carlo() {
    let base = PairCopula::gaussian(0.9).unwrap();
    let n = ParametricMargin::standard_normal();
    let vm = VolatilityMargin::new(&n);
    let want = vol_copula_cdf(&base, &vm, &vm, 0.5, 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let draws = 1_000_000;
    let (mut xs, mut ys) = (Vec::with_capacity(draws), Vec::with_capacity(draws));
    let r = (1.0f64 - 0.81).sqrt();
    for _ in 0..draws {
        let z1: f64 = StandardNormal.sample(&mut rng);
        let z2: f64 = StandardNormal.sample(&mut rng);
        xs.push(z1.abs());
        ys.push((0.9 * z1 + r * z2).abs());
    }
    let mx = stats::quantile(&xs, 0.5);
    let my = stats::quantile(&ys, 0.5);
    let hit = xs.iter().zip(&ys).filter(|(a, b)| **a <= mx && **b <= my).count();
    let emp = hit as f64 / draws as f64;
    assert!((emp - want).abs() < 0.005, "{emp} vs {want}");
}

#[test]
fn quantile_dependence_of_independence() {
    let ind = PairCopula::independence();
    let q = quantile_dependence(|a, b| ind.cdf(a, b), &[0.05, 0.3, 0.9]).unwrap();
    for d in q {
        assert!((d.low - d.alpha).abs() < 1e-12);
        assert!((d.up - (1.0 - d.alpha)).abs() < 1e-12);
        assert!((d.low_up - d.alpha).abs() < 1e-12);
        assert!((d.up_low - d.alpha).abs() < 1e-12);
    }
    assert!(quantile_dependence(|a, b| ind.cdf(a, b), &[0.0]).is_err());
    assert!(quantile_dependence(|a, b| ind.cdf(a, b), &[1.0]).is_err());
}

#[test]
fn aud_posterior_mean_upper_vol_dependence() {
    let base = PairCopula::mixture_t(0.474, 0.153, 9.668, 0.170, 9.866).unwrap();
    let q = quantile_dependence(|a, b| vol_copula_cdf_symmetric(&base, a, b), &[0.95]).unwrap();
    assert!((q[0].up - 0.142).abs() < 0.02, "{}", q[0].up);
}

#[test]
fn empirical_quantile_dependence_matches_model() {
    let base = PairCopula::mixture_t(0.5, 0.9, 3.0, 0.9, 3.0).unwrap();
    let spec = DVineSpec::univariate(vec![base.clone()]).unwrap();
    let u = spec.simulate(1_000_000, 5).unwrap();
    let alphas = [0.05, 0.5, 0.95];
    let model = quantile_dependence(|a, b| base.cdf(a, b), &alphas).unwrap();
    let emp = empirical_quantile_dependence(&u, 1, &alphas);
    for (m, e) in model.iter().zip(&emp) {
        assert!((m.low - e.low).abs() < 0.01, "{m:?} {e:?}");
        assert!((m.up - e.up).abs() < 0.01, "{m:?} {e:?}");
    }
}

#[test]
fn simulated_rho_v_agrees_with_quadrature() {
    let base = sv09();
    let n = ParametricMargin::standard_normal();
    let spec = DVineSpec::univariate(vec![base.clone()]).unwrap();
    let quad = rho_v_symmetric(&base);
    let sim = rho_v_simulated(&spec, &[&n], 1, 0, 0, 200_000, 11, VolTransform::Abs).unwrap();
    assert!((sim.rho_v - quad).abs() < 3.0 * sim.rho_v_se + 0.002, "{sim:?} vs {quad}");
    assert!(sim.rho_y.abs() < 4.0 * sim.rho_y_se + 0.01);
}

#[test]
fn simulated_rho_v_is_invariant_to_v() {
    let spec = DVineSpec::univariate(vec![arch05()]).unwrap();
    let ln = lognormal();
    let a = rho_v_simulated(&spec, &[&ln], 1, 0, 0, 100_000, 2, VolTransform::Abs).unwrap();
    let s = rho_v_simulated(&spec, &[&ln], 1, 0, 0, 100_000, 2, VolTransform::Square).unwrap();
    assert_eq!(a.rho_v.to_bits(), s.rho_v.to_bits());
}

#[test]
fn independence_vine_has_no_simulated_dependence() {
    let spec = DVineSpec::independence(1, 2);
    let n = ParametricMargin::standard_normal();
    let draws = 100_000;
    let r = rho_v_simulated(&spec, &[&n], 2, 0, 0, draws, 4, VolTransform::Abs).unwrap();
    let bound = 3.0 / (draws as f64).sqrt();
    assert!(r.rho_y.abs() < bound && r.rho_v.abs() < bound, "{r:?}");
}

#[test]
fn dependence_matrices_gaussian_cross_section() {
    let zeta: f64 = 0.6;
    let mut pairs = vec![PairCopula::independence(); crate::dvine::pair_count(2, 1)];
    let labels = crate::dvine::pair_labels(2, 1);
    for (idx, &(k, _, _)) in labels.iter().enumerate() {
        if k == 0 {
            pairs[idx] = PairCopula::gaussian(zeta).unwrap();
        }
    }
    let spec = DVineSpec::new(2, 1, pairs).unwrap();
    let n = ParametricMargin::standard_normal();
    let d = dependence_matrices(&spec, &[&n, &n], &[0, 1], 100_000, 9).unwrap();
    let want = 6.0 * (zeta / 2.0).asin() / std::f64::consts::PI;
    assert_eq!(d.rho_y[0][0][0], 1.0);
    assert_eq!(d.rho_v[0][1][1], 1.0);
    assert_eq!(d.rho_y[0][0][1].to_bits(), d.rho_y[0][1][0].to_bits());
    assert!((d.rho_y[0][0][1] - want).abs() < 0.01, "{}", d.rho_y[0][0][1]);
    for i in 0..2 {
        for j in 0..2 {
            assert!(d.rho_y[1][i][j].abs() < 0.015);
            assert!(d.rho_y_se[1][i][j] > 0.0);
        }
    }
}

#[test]
fn histogram_normalization() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let u: Vec<f64> = (0..200_000).map(|_| open_uniform(&mut rng)).collect();
    let bins = 10;
    let h = empirical_copula_hist(&u, 1, bins).unwrap();
    let total: f64 = h.iter().sum::<f64>() / (bins * bins) as f64;
    assert!((total - 1.0).abs() < 1e-12);
    assert!(h.iter().all(|&d| (d - 1.0).abs() < 0.1));
    assert!(empirical_copula_hist(&u, 1, 1).is_err());
}
