use super::*;
use crate::quad::integrate_adaptive;

fn arch05() -> PairCopula {
    PairCopula::mixture_t(0.191, 0.705, 39.996, 0.179, 2.984).unwrap()
}

fn fig1() -> PairCopula {
    PairCopula::mixture_t(0.5, 0.9, 3.0, 0.9, 3.0).unwrap()
}

fn all_families() -> Vec<PairCopula> {
    vec![
        PairCopula::gaussian(0.6).unwrap(),
        PairCopula::t(0.4, 4.5).unwrap(),
        PairCopula::gumbel(0.35).unwrap(),
        PairCopula::convex_gumbel(0.5, 0.3).unwrap(),
        arch05(),
        fig1(),
        PairCopula::mixture_convex_gumbel(0.4, 0.3, 0.8, 0.6, 0.25).unwrap(),
    ]
}

fn density_mass(c: &PairCopula, u1: f64, v1: f64) -> f64 {
    integrate_adaptive(
        |u| integrate_adaptive(|v| c.density(u, v).unwrap(), 0.0, v1, 1e-9).0,
        0.0,
        u1,
        1e-8,
    )
    .0
}

#[test]
fn convex_gumbel_at_zero_tau_is_independence() {
    for delta in [0.0, 0.3, 1.0] {
        let c = PairCopula::convex_gumbel(0.0, delta).unwrap();
        assert!((c.density(0.3, 0.8).unwrap() - 1.0).abs() < 1e-14);
        assert!((c.h1(0.6, 0.2).unwrap() - 0.6).abs() < 1e-14);
        assert!((c.h2(0.45, 0.9).unwrap() - 0.45).abs() < 1e-14);
    }
}

#[test]
fn mixture_with_equal_weights_is_reflection_symmetric() {
    let c = fig1();
    let a = c.density(0.2, 0.7).unwrap();
    let b = c.density(0.8, 0.7).unwrap();
    assert!((a - b).abs() < 1e-12 * a);
}

#[test]
fn mixture_reflection_identity() {
    let c = PairCopula::mixture_t(0.3, 0.6, 5.0, 0.2, 12.0).unwrap();
    let PairCopula::Mixture(m) = c else { unreachable!() };
    let swapped = PairCopula::Mixture(m.swapped());
    for &(u, v) in &[(0.1, 0.2), (0.55, 0.93), (0.97, 0.04)] {
        let a = c.density(u, v).unwrap();
        let b = swapped.density(1.0 - u, v).unwrap();
        assert!((a - b).abs() < 1e-10 * a, "{a} vs {b}");
    }
}

#[test]
fn density_integrates_to_one() {
    for c in [arch05(), PairCopula::mixture_convex_gumbel(0.4, 0.3, 0.8, 0.6, 0.25).unwrap()] {
        let mass = density_mass(&c, 1.0, 1.0);
        assert!((mass - 1.0).abs() < 1e-4, "{c:?}: {mass}");
    }
}

#[test]
fn cdf_matches_density_quadrature() {
    let c = fig1();
    let direct = c.cdf(0.3, 0.7).unwrap();
    let oracle = density_mass(&c, 0.3, 0.7);
    assert!((direct - oracle).abs() < 1e-5, "{direct} vs {oracle}");
}

#[test]
fn cdf_boundaries() {
    for c in all_families() {
        for &x in &[0.0, 0.13, 0.5, 0.91, 1.0] {
            assert!((c.cdf(x, 1.0).unwrap() - x).abs() < 1e-14);
            assert!((c.cdf(1.0, x).unwrap() - x).abs() < 1e-14);
            assert_eq!(c.cdf(x, 0.0).unwrap(), 0.0);
            assert_eq!(c.cdf(0.0, x).unwrap(), 0.0);
        }
    }
}

#[test]
fn h_functions_match_finite_differences() {
    let eps = 1e-4;
    for c in all_families() {
        let (u, v) = (0.3, 0.6);
        let fd = (c.cdf(u + eps, v).unwrap() - c.cdf(u - eps, v).unwrap()) / (2.0 * eps);
        let h = c.h1(v, u).unwrap();
        assert!((fd - h).abs() < 1e-5, "h1 {c:?}: {h} vs {fd}");

        let (u, v) = (0.4, 0.2);
        let fd = (c.cdf(u, v + eps).unwrap() - c.cdf(u, v - eps).unwrap()) / (2.0 * eps);
        let h = c.h2(u, v).unwrap();
        assert!((fd - h).abs() < 1e-5, "h2 {c:?}: {h} vs {fd}");
    }
}

#[test]
fn mixture_h1_from_direct_partial_derivative() {
    // ∂C/∂u = ∫_0^v c(u, s) ds
    let c = fig1();
    for &u in &[0.2, 0.8] {
        let v = 0.35;
        let oracle = integrate_adaptive(|s| c.density(u, s).unwrap(), 0.0, v, 1e-12).0;
        assert!((c.h1(v, u).unwrap() - oracle).abs() < 1e-8);
    }
    // equal weights and identical components: h1(v|u) + h1(v|1-u) = 2·h^t(v|u)-free check
    let s = c.h1(0.35, 0.2).unwrap() + c.h1(0.35, 0.8).unwrap();
    let t = PairCopula::t(0.9, 3.0).unwrap();
    let expect = t.h1(0.35, 0.2).unwrap() + t.h1(0.35, 0.8).unwrap();
    assert!((s - expect).abs() < 1e-10);
}

#[test]
fn exchangeable_t_has_equal_h_functions() {
    let c = PairCopula::t(0.55, 6.0).unwrap();
    let a = c.h2(0.25, 0.65).unwrap();
    let b = c.h1(0.25, 0.65).unwrap();
    assert!((a - b).abs() < 1e-15);
}

#[test]
fn mixture_h_functions_differ() {
    // a t mixture is exchangeable (rotated t is still exchangeable), a
    // convex-Gumbel mixture is not
    let c = PairCopula::mixture_t(0.3, 0.6, 5.0, 0.2, 12.0).unwrap();
    assert!((c.h2(0.25, 0.65).unwrap() - c.h1(0.25, 0.65).unwrap()).abs() < 1e-12);
    let c = PairCopula::mixture_convex_gumbel(0.3, 0.6, 0.9, 0.4, 0.2).unwrap();
    assert!(!c.is_exchangeable());
    let a = c.h2(0.25, 0.65).unwrap();
    let b = c.h1(0.25, 0.65).unwrap();
    assert!((a - b).abs() > 1e-4, "{a} {b}");
}

#[test]
fn h_inverse_roundtrip() {
    for c in all_families() {
        let v = c.h1_inverse(0.37, 0.81).unwrap();
        assert!((c.h1(v, 0.81).unwrap() - 0.37).abs() < 1e-8, "{c:?}");
        let u = c.h2_inverse(0.37, 0.81).unwrap();
        assert!((c.h2(u, 0.81).unwrap() - 0.37).abs() < 1e-8, "{c:?}");
    }
}

#[test]
fn h_inverse_limits() {
    let c = arch05();
    assert!(c.h1_inverse(1e-14, 0.5).unwrap() < 1e-6);
    assert!(c.h1_inverse(1.0 - 1e-14, 0.5).unwrap() > 1.0 - 1e-6);
    assert_eq!(PairCopula::independence().h1_inverse(0.42, 0.1).unwrap(), 0.42);
}

#[test]
fn gumbel_closed_form_inverse_is_consistent() {
    let g = PairCopula::gumbel(0.8).unwrap();
    for &q in &[1e-9, 0.01, 0.5, 0.99, 1.0 - 1e-9] {
        for &u in &[1e-6, 0.3, 0.999] {
            let v = g.h1_inverse(q, u).unwrap();
            if v < CLAMP_EPS {
                continue;
            }
            let back = g.h1(v, u).unwrap();
            assert!((back - q).abs() < 1e-9, "q={q} u={u}: {back}");
        }
    }
}

#[test]
fn spearman_independence_and_gaussian() {
    assert!(PairCopula::independence().spearman_rho().abs() < 1e-6);
    assert!(PairCopula::convex_gumbel(0.0, 0.4).unwrap().spearman_rho().abs() < 1e-6);
    let g = GaussianCopula::new(0.7).unwrap();
    let rho = PairCopula::Gaussian(g).spearman_rho();
    assert!((rho - g.spearman_closed_form()).abs() < 1e-6, "{rho}");
}

#[test]
fn spearman_matches_product_moment_quadrature() {
    // 12 E[UV] - 3 from the density is an independent route
    let c = PairCopula::t(0.5, 4.0).unwrap();
    let e_uv = integrate_adaptive(
        |u| integrate_adaptive(|v| u * v * c.density(u, v).unwrap(), 0.0, 1.0, 1e-10).0,
        0.0,
        1.0,
        1e-9,
    )
    .0;
    let oracle = 12.0 * e_uv - 3.0;
    assert!((c.spearman_rho() - oracle).abs() < 1e-5);
}

#[test]
fn spearman_of_fitted_heteroskedastic_mixtures_is_near_zero() {
    let rho = arch05().spearman_rho();
    assert!((rho + 0.002).abs() < 0.01, "{rho}");
    let sv09 = PairCopula::mixture_t(0.512, 0.693, 10.740, 0.728, 15.031).unwrap();
    let rho = sv09.spearman_rho();
    assert!((rho + 0.002).abs() < 0.01, "{rho}");
}

#[test]
fn cdf_grid_matches_pointwise_cdf() {
    let us = [0.0, 1e-7, 0.05, 0.3, 0.77, 0.999, 1.0];
    let vs = [0.01, 0.5, 0.95];
    for c in all_families() {
        let g = c.cdf_grid(&us, &vs);
        for (i, &u) in us.iter().enumerate() {
            for (j, &v) in vs.iter().enumerate() {
                let p = c.cdf(u, v).unwrap();
                assert!((g[i * vs.len() + j] - p).abs() < 1e-9, "{c:?} ({u},{v})");
            }
        }
    }
}

#[test]
fn tail_dependence_of_t_mixture() {
    let c = fig1();
    let (lo, up) = c.tail_dependence();
    let lt = TCopula::tail_coefficient(0.9, 3.0);
    let lr = TCopula::tail_coefficient(-0.9, 3.0);
    assert!((lo - 0.5 * (lt + lr)).abs() < 1e-14);
    assert_eq!(lo, up);
    // the limit is approached by C(a,a)/a
    let a = 1e-6;
    let q = c.cdf(a, a).unwrap() / a;
    assert!((q - lo).abs() < 0.02, "{q} vs {lo}");
}

#[test]
fn domain_and_parameter_errors() {
    assert!(matches!(PairCopula::t(1.2, 4.0), Err(Error::InvalidParameter(_))));
    assert!(matches!(PairCopula::t(0.2, 41.0), Err(Error::InvalidParameter(_))));
    assert!(matches!(PairCopula::gumbel(1.0), Err(Error::InvalidParameter(_))));
    assert!(matches!(
        PairCopula::mixture_t(1.0, 0.1, 4.0, 0.1, 4.0),
        Err(Error::InvalidParameter(_))
    ));
    let c = fig1();
    assert!(matches!(c.density(1.5, 0.2), Err(Error::Domain(_))));
    assert!(matches!(c.h1(f64::NAN, 0.2), Err(Error::Domain(_))));
}

#[test]
fn clamped_boundary_evaluation_is_finite() {
    for c in all_families() {
        for &(u, v) in &[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (0.0, 0.5)] {
            assert!(c.ln_density(u, v).unwrap().is_finite(), "{c:?} ({u},{v})");
        }
    }
}

#[test]
fn serde_roundtrip_uses_flat_params() {
    let c = arch05();
    let js = serde_json::to_value(c).unwrap();
    assert_eq!(js["family"], "mixture_t");
    assert_eq!(js["params"]["nu_b"], 2.984);
    let back: PairCopula = serde_json::from_value(js).unwrap();
    assert_eq!(back, c);
    let bad = serde_json::json!({"family": "t", "params": {"zeta": 0.5, "nu": 1.0}});
    assert!(serde_json::from_value::<PairCopula>(bad).is_err());
    let ind: PairCopula = serde_json::from_str(r#"{"family":"independence"}"#).unwrap();
    assert_eq!(ind, PairCopula::Independence);
}

#[test]
fn sampled_pairs_reproduce_rank_dependence() {
    let c = fig1();
    let n = 100_000;
    let pairs = c.sample_pair(n, 11).unwrap();
    let us: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let vs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let rho = crate::stats::spearman(&us, &vs);
    assert!((rho - c.spearman_rho()).abs() < 0.015, "{rho}");
    let emp = pairs.iter().filter(|p| p.0 <= 0.25 && p.1 <= 0.25).count() as f64 / n as f64;
    assert!((emp - c.cdf(0.25, 0.25).unwrap()).abs() < 0.005);
    assert_eq!(pairs, c.sample_pair(n, 11).unwrap());
}
