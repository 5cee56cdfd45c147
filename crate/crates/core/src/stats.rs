//! Sample statistics: ranks, Spearman correlation, moments, empirical
//! quantiles and Monte Carlo standard errors.

use serde::{Deserialize, Serialize};

/// Mid-ranks (1-based, ties averaged).
pub fn ranks(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && x[idx[j]] == x[idx[i]] {
            j += 1;
        }
        let avg = 0.5 * ((i + 1) + j) as f64;
        for &k in &idx[i..j] {
            r[k] = avg;
        }
        i = j;
    }
    r
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == 0.0 || syy == 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

/// Spearman's rank correlation.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&ranks(x), &ranks(y))
}

/// Spearman correlation of (x_{t-k}, x_t).
pub fn spearman_lag(x: &[f64], k: usize) -> f64 {
    assert!(k < x.len());
    spearman(&x[..x.len() - k], &x[k..])
}

/// Sample moments; kurtosis is non-excess (3 for a Gaussian).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub mean: f64,
    pub sd: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

pub fn moments(x: &[f64]) -> Moments {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for &v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    let (skewness, kurtosis) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2))
    } else {
        (0.0, 0.0)
    };
    Moments {
        mean,
        sd: (m2 * n / (n - 1.0)).sqrt(),
        skewness,
        kurtosis,
    }
}

/// Empirical quantile by linear interpolation between order statistics.
pub fn quantile(x: &[f64], p: f64) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    quantile_sorted(&s, p)
}

pub fn quantile_sorted(s: &[f64], p: f64) -> f64 {
    let n = s.len();
    if n == 1 {
        return s[0];
    }
    let h = p.clamp(0.0, 1.0) * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

/// Kolmogorov–Smirnov distance between the sample and U(0,1).
pub fn ks_uniform(u: &[f64]) -> f64 {
    let mut s = u.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let a = (i + 1) as f64 / n - x;
            let b = x - i as f64 / n;
            a.max(b)
        })
        .fold(0.0, f64::max)
}

/// Standard error of the mean of `x` by non-overlapping batch means.
pub fn batch_means_se(x: &[f64], batches: usize) -> f64 {
    let b = batches.max(2).min(x.len());
    let len = x.len() / b;
    let means: Vec<f64> = (0..b)
        .map(|i| x[i * len..(i + 1) * len].iter().sum::<f64>() / len as f64)
        .collect();
    let m = means.iter().sum::<f64>() / b as f64;
    let var = means.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (b - 1) as f64;
    (var / b as f64).sqrt()
}

/// Spearman's rho with a standard error obtained from batch-wise
/// estimates over `batches` contiguous blocks.
pub fn spearman_with_se(x: &[f64], y: &[f64], batches: usize) -> (f64, f64) {
    let rho = spearman(x, y);
    let b = batches.max(2);
    let len = x.len() / b;
    let est: Vec<f64> = (0..b)
        .map(|i| spearman(&x[i * len..(i + 1) * len], &y[i * len..(i + 1) * len]))
        .collect();
    let m = est.iter().sum::<f64>() / b as f64;
    let var = est.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (b - 1) as f64;
    (rho, (var / b as f64).sqrt())
}
