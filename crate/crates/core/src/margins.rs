//! Univariate margins: an adaptive-bandwidth Gaussian KDE tabulated on a
//! fixed grid, and a few parametric distributions used by the simulators.

use crate::bicop::CLAMP_EPS;
use crate::error::{Error, Result};
use crate::special::{norm_cdf, norm_pdf, norm_quantile, StudentT};
use crate::stats;
use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

/// Distribution functions of a continuous margin.
pub trait Margin: Send + Sync {
    fn cdf(&self, x: f64) -> f64;
    fn pdf(&self, x: f64) -> f64;
    fn quantile(&self, p: f64) -> f64;
    fn mean(&self) -> f64;

    /// Probability integral transform, clamped to the open unit interval.
    fn pit(&self, data: &[f64]) -> Vec<f64> {
        data.iter()
            .map(|&y| self.cdf(y).clamp(CLAMP_EPS, 1.0 - CLAMP_EPS))
            .collect()
    }
}

/// Settings for `fit_margin`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KdeConfig {
    pub grid_points: usize,
    /// Grid extends this many standard deviations beyond the sample range.
    pub pad_sd: f64,
    /// Abramson sensitivity exponent.
    pub sensitivity: f64,
    /// Multiplier on the Silverman pilot bandwidth.
    pub bandwidth_scale: f64,
}

impl Default for KdeConfig {
    fn default() -> Self {
        KdeConfig {
            grid_points: 4096,
            pad_sd: 4.0,
            sensitivity: 0.5,
            bandwidth_scale: 1.0,
        }
    }
}

const KERNEL_RADIUS: f64 = 6.0;

/// Fitted KDE margin tabulated on an equally spaced grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginModel {
    pub grid: Vec<f64>,
    pub pdf_values: Vec<f64>,
    pub cdf_values: Vec<f64>,
    pub mean: f64,
    /// Gaussian tail beyond the lower grid edge: centre and scale.
    pub lower_tail: (f64, f64),
    pub upper_tail: (f64, f64),
}

/// Adds `weight·φ((g - x)/h)/h` to every grid cell within the kernel radius.
fn add_kernel(out: &mut [f64], lo: f64, step: f64, x: f64, h: f64, weight: f64) {
    let n = out.len();
    let reach = KERNEL_RADIUS * h;
    let first = (((x - reach - lo) / step).ceil().max(0.0)) as usize;
    let last = (((x + reach - lo) / step).floor().min((n - 1) as f64)).max(-1.0);
    if last < 0.0 {
        return;
    }
    let last = last as usize;
    let c = weight / h;
    for (j, slot) in out.iter_mut().enumerate().take(last + 1).skip(first) {
        let z = (lo + j as f64 * step - x) / h;
        *slot += c * norm_pdf(z);
    }
}

fn interp(lo: f64, step: f64, values: &[f64], x: f64) -> f64 {
    let pos = (x - lo) / step;
    if pos <= 0.0 {
        return values[0];
    }
    let i = pos.floor() as usize;
    if i + 1 >= values.len() {
        return *values.last().unwrap();
    }
    let frac = pos - i as f64;
    values[i] + frac * (values[i + 1] - values[i])
}

/// Fits an Abramson adaptive-bandwidth Gaussian KDE.
pub fn fit_margin(data: &[f64], cfg: &KdeConfig) -> Result<MarginModel> {
    if data.len() < 100 {
        return Err(Error::param(format!(
            "margin needs at least 100 observations, got {}",
            data.len()
        )));
    }
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::param("margin data contain non-finite values"));
    }
    let m = stats::moments(data);
    if !(m.sd > 0.0) {
        return Err(Error::DegenerateMargin("constant series".into()));
    }
    let n = data.len() as f64;
    let min = data.iter().copied().fold(f64::INFINITY, f64::min);
    let max = data.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = min - cfg.pad_sd * m.sd;
    let hi = max + cfg.pad_sd * m.sd;
    let g = cfg.grid_points.max(16);
    let step = (hi - lo) / (g - 1) as f64;

    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = stats::quantile_sorted(&sorted, 0.75) - stats::quantile_sorted(&sorted, 0.25);
    let spread = if iqr > 0.0 { m.sd.min(iqr / 1.34) } else { m.sd };
    let h0 = (cfg.bandwidth_scale * 0.9 * spread * n.powf(-0.2)).max(step);

    let mut pilot = vec![0.0; g];
    for &x in data {
        add_kernel(&mut pilot, lo, step, x, h0, 1.0 / n);
    }
    let at_data: Vec<f64> = data
        .iter()
        .map(|&x| interp(lo, step, &pilot, x).max(1e-300))
        .collect();
    let ln_geo = at_data.iter().map(|f| f.ln()).sum::<f64>() / n;
    let bandwidths: Vec<f64> = at_data
        .iter()
        .map(|&f| (h0 * (-cfg.sensitivity * (f.ln() - ln_geo)).exp()).max(step))
        .collect();

    let mut pdf = vec![0.0; g];
    for (&x, &h) in data.iter().zip(&bandwidths) {
        add_kernel(&mut pdf, lo, step, x, h, 1.0 / n);
    }

    // Gaussian tails centred on the extreme observations with their kernels' widths
    let (i_min, i_max) = data.iter().enumerate().fold((0, 0), |(a, b), (i, &x)| {
        (
            if x < data[a] { i } else { a },
            if x > data[b] { i } else { b },
        )
    });
    let lower_tail = (data[i_min], bandwidths[i_min]);
    let upper_tail = (data[i_max], bandwidths[i_max]);
    let mass_below = tail_mass(pdf[0], lower_tail, lo);
    let mass_above = tail_mass(pdf[g - 1], upper_tail, hi);

    let mut cdf = vec![0.0; g];
    let mut acc = mass_below;
    cdf[0] = acc;
    for j in 1..g {
        acc += 0.5 * step * (pdf[j - 1] + pdf[j]);
        cdf[j] = acc;
    }
    let total = acc + mass_above;
    for (p, c) in pdf.iter_mut().zip(cdf.iter_mut()) {
        *p /= total;
        *c /= total;
    }
    let grid = (0..g).map(|j| lo + j as f64 * step).collect();
    Ok(MarginModel {
        grid,
        pdf_values: pdf,
        cdf_values: cdf,
        mean: m.mean,
        lower_tail,
        upper_tail,
    })
}

/// Mass of the Gaussian tail beyond `edge` whose density at the edge is
/// `f_edge`.
fn tail_mass(f_edge: f64, (centre, scale): (f64, f64), edge: f64) -> f64 {
    let z0 = (edge - centre).abs() / scale;
    let phi = norm_pdf(z0);
    if f_edge <= 0.0 || phi <= 0.0 {
        return 0.0;
    }
    f_edge * scale * norm_cdf(-z0) / phi
}

impl MarginModel {
    fn lo(&self) -> f64 {
        self.grid[0]
    }

    fn hi(&self) -> f64 {
        *self.grid.last().unwrap()
    }

    fn step(&self) -> f64 {
        (self.hi() - self.lo()) / (self.grid.len() - 1) as f64
    }

    /// Integral of the interpolated density, ∫ pdf, including tails.
    pub fn total_mass(&self) -> f64 {
        let n = self.grid.len();
        self.cdf_values[n - 1]
            + tail_mass(self.pdf_values[n - 1], self.upper_tail, self.hi())
    }

    fn tail_pdf(&self, x: f64, lower: bool) -> f64 {
        let (edge, f_edge, (c, s)) = if lower {
            (self.lo(), self.pdf_values[0], self.lower_tail)
        } else {
            (self.hi(), *self.pdf_values.last().unwrap(), self.upper_tail)
        };
        let z0 = (edge - c) / s;
        let z = (x - c) / s;
        if f_edge <= 0.0 {
            return 0.0;
        }
        f_edge * (-0.5 * (z * z - z0 * z0)).exp()
    }
}

impl Margin for MarginModel {
    fn pdf(&self, x: f64) -> f64 {
        if x < self.lo() {
            self.tail_pdf(x, true)
        } else if x > self.hi() {
            self.tail_pdf(x, false)
        } else {
            interp(self.lo(), self.step(), &self.pdf_values, x)
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        let (lo, hi, step) = (self.lo(), self.hi(), self.step());
        if x.is_nan() {
            return f64::NAN;
        }
        if x < lo {
            let (c, s) = self.lower_tail;
            let m = tail_mass(self.pdf_values[0], self.lower_tail, lo);
            if m == 0.0 {
                return 0.0;
            }
            return m * norm_cdf((x - c) / s) / norm_cdf((lo - c) / s);
        }
        if x >= hi {
            let (c, s) = self.upper_tail;
            let last = *self.cdf_values.last().unwrap();
            let m = tail_mass(*self.pdf_values.last().unwrap(), self.upper_tail, hi);
            if m == 0.0 {
                return last.min(1.0);
            }
            let frac = norm_cdf(-(x - c) / s) / norm_cdf(-(hi - c) / s);
            return (1.0 - m * frac).min(1.0);
        }
        let pos = (x - lo) / step;
        let i = (pos.floor() as usize).min(self.grid.len() - 2);
        let d = x - self.grid[i];
        let f0 = self.pdf_values[i];
        let f1 = self.pdf_values[i + 1];
        (self.cdf_values[i] + f0 * d + 0.5 * (f1 - f0) * d * d / step).clamp(0.0, 1.0)
    }

    fn quantile(&self, p: f64) -> f64 {
        let (lo, hi, step) = (self.lo(), self.hi(), self.step());
        if p.is_nan() {
            return f64::NAN;
        }
        let first = self.cdf_values[0];
        let last = *self.cdf_values.last().unwrap();
        if p < first {
            let (c, s) = self.lower_tail;
            let target = p / first * norm_cdf((lo - c) / s);
            return c + s * norm_quantile(target);
        }
        if p > last {
            let (c, s) = self.upper_tail;
            let m = 1.0 - last;
            if m <= 0.0 {
                return hi;
            }
            let target = (1.0 - p) / m * norm_cdf(-(hi - c) / s);
            return c - s * norm_quantile(target);
        }
        let i = self
            .cdf_values
            .partition_point(|&c| c <= p)
            .saturating_sub(1)
            .min(self.grid.len() - 2);
        let f0 = self.pdf_values[i];
        let f1 = self.pdf_values[i + 1];
        let r = p - self.cdf_values[i];
        let a = 0.5 * (f1 - f0) / step;
        let disc = (f0 * f0 + 4.0 * a * r).max(0.0);
        let denom = f0 + disc.sqrt();
        let d = if denom > 0.0 { 2.0 * r / denom } else { 0.0 };
        (self.grid[i] + d.clamp(0.0, step)).clamp(lo, hi)
    }

    fn mean(&self) -> f64 {
        self.mean
    }
}

/// Parametric margins used for simulation and closed-form checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum ParametricMargin {
    Normal { mean: f64, sd: f64 },
    StudentT { loc: f64, scale: f64, nu: f64 },
    Beta { a: f64, b: f64 },
    LogNormal { mu: f64, sigma: f64 },
    Uniform { lo: f64, hi: f64 },
}

impl ParametricMargin {
    pub fn standard_normal() -> Self {
        ParametricMargin::Normal { mean: 0.0, sd: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ParametricMargin::Normal { sd, .. } => sd > 0.0,
            ParametricMargin::StudentT { scale, nu, .. } => scale > 0.0 && nu > 1.0,
            ParametricMargin::Beta { a, b } => a > 0.0 && b > 0.0,
            ParametricMargin::LogNormal { sigma, .. } => sigma > 0.0,
            ParametricMargin::Uniform { lo, hi } => hi > lo,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(format!("invalid margin {self:?}")))
        }
    }

    /// True if the density is symmetric about the mean.
    pub fn is_symmetric(&self) -> bool {
        match *self {
            ParametricMargin::Beta { a, b } => a == b,
            ParametricMargin::LogNormal { .. } => false,
            _ => true,
        }
    }

    fn beta(a: f64, b: f64) -> Beta {
        Beta::new(a, b).expect("validated beta parameters")
    }
}

impl Margin for ParametricMargin {
    fn cdf(&self, x: f64) -> f64 {
        match *self {
            ParametricMargin::Normal { mean, sd } => norm_cdf((x - mean) / sd),
            ParametricMargin::StudentT { loc, scale, nu } => StudentT::new(nu).cdf((x - loc) / scale),
            ParametricMargin::Beta { a, b } => Self::beta(a, b).cdf(x.clamp(0.0, 1.0)),
            ParametricMargin::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    norm_cdf((x.ln() - mu) / sigma)
                }
            }
            ParametricMargin::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
        }
    }

    fn pdf(&self, x: f64) -> f64 {
        use statrs::distribution::Continuous;
        match *self {
            ParametricMargin::Normal { mean, sd } => norm_pdf((x - mean) / sd) / sd,
            ParametricMargin::StudentT { loc, scale, nu } => {
                StudentT::new(nu).pdf((x - loc) / scale) / scale
            }
            ParametricMargin::Beta { a, b } => {
                if x <= 0.0 || x >= 1.0 {
                    0.0
                } else {
                    Self::beta(a, b).pdf(x)
                }
            }
            ParametricMargin::LogNormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    norm_pdf((x.ln() - mu) / sigma) / (sigma * x)
                }
            }
            ParametricMargin::Uniform { lo, hi } => {
                if x < lo || x > hi {
                    0.0
                } else {
                    1.0 / (hi - lo)
                }
            }
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        match *self {
            ParametricMargin::Normal { mean, sd } => mean + sd * norm_quantile(p),
            ParametricMargin::StudentT { loc, scale, nu } => {
                loc + scale * StudentT::new(nu).quantile(p)
            }
            ParametricMargin::Beta { a, b } => Self::beta(a, b).inverse_cdf(p.clamp(0.0, 1.0)),
            ParametricMargin::LogNormal { mu, sigma } => (mu + sigma * norm_quantile(p)).exp(),
            ParametricMargin::Uniform { lo, hi } => lo + p.clamp(0.0, 1.0) * (hi - lo),
        }
    }

    fn mean(&self) -> f64 {
        match *self {
            ParametricMargin::Normal { mean, .. } => mean,
            ParametricMargin::StudentT { loc, .. } => loc,
            ParametricMargin::Beta { a, b } => a / (a + b),
            ParametricMargin::LogNormal { mu, sigma } => (mu + 0.5 * sigma * sigma).exp(),
            ParametricMargin::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }
}

/// A stored margin of either kind, as kept in margin files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnyMargin {
    Kde(MarginModel),
    Parametric(ParametricMargin),
}

impl Margin for AnyMargin {
    fn cdf(&self, x: f64) -> f64 {
        match self {
            AnyMargin::Kde(m) => m.cdf(x),
            AnyMargin::Parametric(m) => m.cdf(x),
        }
    }

    fn pdf(&self, x: f64) -> f64 {
        match self {
            AnyMargin::Kde(m) => m.pdf(x),
            AnyMargin::Parametric(m) => m.pdf(x),
        }
    }

    fn quantile(&self, p: f64) -> f64 {
        match self {
            AnyMargin::Kde(m) => m.quantile(p),
            AnyMargin::Parametric(m) => m.quantile(p),
        }
    }

    fn mean(&self) -> f64 {
        match self {
            AnyMargin::Kde(m) => m.mean(),
            AnyMargin::Parametric(m) => m.mean(),
        }
    }
}

/// Standard sample moments (non-excess kurtosis).
pub fn moments(data: &[f64]) -> Result<stats::Moments> {
    if data.len() < 4 {
        return Err(Error::param("moments need at least 4 observations"));
    }
    Ok(stats::moments(data))
}
