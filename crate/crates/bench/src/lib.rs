//! Shared fixtures for the benchmarks.

use hetcop::datagen::{simulate_arch, ArchParams};
use hetcop::margins::{fit_margin, KdeConfig, MarginModel};
use hetcop::{DVineSpec, PairCopula};

/// The mixture-of-t pair copula used throughout the benchmarks.
pub fn mixture() -> PairCopula {
    PairCopula::mixture_t(0.85, 0.1, 3.0, 0.6, 20.0).expect("valid parameters")
}

/// A first-order univariate vine with the benchmark mixture.
pub fn vine(p: usize) -> DVineSpec {
    DVineSpec::uniform(1, p, mixture()).expect("valid vine")
}

/// An ARCH(1) series of length `t` and its KDE margin.
pub fn arch_series(t: usize) -> (Vec<f64>, MarginModel) {
    let params = ArchParams { alpha0: 0.5, alphas: vec![0.5] };
    let y = simulate_arch(&params, t, 1).expect("stationary ARCH");
    let margin = fit_margin(&y, &KdeConfig::default()).expect("KDE fit");
    (y, margin)
}
