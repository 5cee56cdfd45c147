//! Elliptical pair-copulas: Student t and Gaussian.

use super::{Bivariate, ParamBound, NU_MAX};
use crate::error::{Error, Result};
use crate::special::{lgamma, norm_cdf, norm_quantile, StudentT};
use serde::{Deserialize, Serialize};

/// Parameters of a bivariate t copula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TCopulaParams {
    /// Correlation, restricted to non-negative dependence.
    pub zeta: f64,
    /// Degrees of freedom.
    pub nu: f64,
}

impl TCopulaParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.zeta >= 0.0 && self.zeta < 1.0) {
            return Err(Error::param(format!("t copula: zeta={} not in [0,1)", self.zeta)));
        }
        if !(self.nu > 2.0 && self.nu <= NU_MAX) {
            return Err(Error::param(format!(
                "t copula: nu={} not in (2,{NU_MAX}]",
                self.nu
            )));
        }
        Ok(())
    }
}

/// Bivariate t copula with cached distribution constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TCopula {
    params: TCopulaParams,
    t_nu: StudentT,
    t_nu1: StudentT,
    ln_const: f64,
    one_minus_rho2: f64,
}

impl TCopula {
    pub fn new(zeta: f64, nu: f64) -> Result<Self> {
        let params = TCopulaParams { zeta, nu };
        params.validate()?;
        let one_minus_rho2 = 1.0 - zeta * zeta;
        let ln_const = lgamma(0.5 * (nu + 2.0)) + lgamma(0.5 * nu)
            - 2.0 * lgamma(0.5 * (nu + 1.0))
            - 0.5 * one_minus_rho2.ln();
        Ok(TCopula {
            params,
            t_nu: StudentT::new(nu),
            t_nu1: StudentT::new(nu + 1.0),
            ln_const,
            one_minus_rho2,
        })
    }

    pub fn params(&self) -> TCopulaParams {
        self.params
    }

    pub fn zeta(&self) -> f64 {
        self.params.zeta
    }

    pub fn nu(&self) -> f64 {
        self.params.nu
    }

    /// Quantile of the univariate t margin with this copula's degrees of freedom.
    #[inline]
    pub fn score(&self, u: f64) -> f64 {
        self.t_nu.quantile(u)
    }

    /// Log-density from precomputed t scores.
    #[inline]
    pub fn ln_density_scores(&self, x: f64, y: f64) -> f64 {
        let nu = self.params.nu;
        let rho = self.params.zeta;
        let q = (x * x - 2.0 * rho * x * y + y * y) / (nu * self.one_minus_rho2);
        self.ln_const - 0.5 * (nu + 2.0) * q.ln_1p()
            + 0.5 * (nu + 1.0) * ((x * x / nu).ln_1p() + (y * y / nu).ln_1p())
    }

    /// P(V <= v | U = u) from t scores x of u and y of v.
    #[inline]
    pub fn h_scores(&self, y: f64, x: f64) -> f64 {
        let nu = self.params.nu;
        let rho = self.params.zeta;
        let scale = ((nu + x * x) * self.one_minus_rho2 / (nu + 1.0)).sqrt();
        self.t_nu1.cdf((y - rho * x) / scale)
    }

    /// Upper (= lower) tail-dependence coefficient of a t copula with
    /// correlation `rho`.
    pub fn tail_coefficient(rho: f64, nu: f64) -> f64 {
        let arg = -((nu + 1.0) * (1.0 - rho) / (1.0 + rho)).sqrt();
        2.0 * StudentT::new(nu + 1.0).cdf(arg)
    }

    pub(crate) fn bounds() -> Vec<ParamBound> {
        vec![ParamBound::new(0.0, 1.0), ParamBound::new(2.0, NU_MAX)]
    }
}

impl Bivariate for TCopula {
    fn ln_density(&self, u: f64, v: f64) -> f64 {
        self.ln_density_scores(self.score(u), self.score(v))
    }

    fn h1(&self, v: f64, u: f64) -> f64 {
        self.h_scores(self.score(v), self.score(u))
    }

    fn h2(&self, u: f64, v: f64) -> f64 {
        self.h1(u, v)
    }

    fn h1_inverse_closed(&self, q: f64, u: f64) -> Option<f64> {
        let nu = self.params.nu;
        let rho = self.params.zeta;
        let x = self.score(u);
        let scale = ((nu + x * x) * self.one_minus_rho2 / (nu + 1.0)).sqrt();
        let y = rho * x + scale * self.t_nu1.quantile(q);
        Some(self.t_nu.cdf(y))
    }

    fn h2_inverse_closed(&self, q: f64, v: f64) -> Option<f64> {
        self.h1_inverse_closed(q, v)
    }

    fn eval_all(&self, u: f64, v: f64) -> (f64, f64, f64) {
        let x = self.score(u);
        let y = self.score(v);
        (self.ln_density_scores(x, y), self.h_scores(y, x), self.h_scores(x, y))
    }

    fn eval_all_reflected(&self, u: f64, v: f64) -> (f64, f64, f64) {
        let x = -self.score(u);
        let y = self.score(v);
        (self.ln_density_scores(x, y), self.h_scores(y, x), self.h_scores(x, y))
    }

    fn cdf_grid(&self, us: &[f64], vs: &[f64]) -> Vec<f64> {
        let nu = self.params.nu;
        let rho = self.params.zeta;
        let ys: Vec<f64> = vs.iter().map(|&v| self.score(v)).collect();
        super::integrate_h1_grid(us, vs, |s| {
            let x = self.score(s);
            let scale = ((nu + x * x) * self.one_minus_rho2 / (nu + 1.0)).sqrt();
            (x, scale)
        }, |&(x, scale), j| self.t_nu1.cdf((ys[j] - rho * x) / scale))
    }
}

/// Gaussian copula; used for closed-form checks and as a building block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianCopula {
    pub rho: f64,
}

impl GaussianCopula {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho > -1.0 && rho < 1.0) {
            return Err(Error::param(format!("gaussian copula: rho={rho} not in (-1,1)")));
        }
        Ok(GaussianCopula { rho })
    }

    /// Spearman's rho in closed form.
    pub fn spearman_closed_form(&self) -> f64 {
        6.0 / std::f64::consts::PI * (0.5 * self.rho).asin()
    }

    fn scale(&self) -> f64 {
        (1.0 - self.rho * self.rho).sqrt()
    }
}

impl Bivariate for GaussianCopula {
    fn ln_density(&self, u: f64, v: f64) -> f64 {
        let x = norm_quantile(u);
        let y = norm_quantile(v);
        let r = self.rho;
        let d = 1.0 - r * r;
        -0.5 * d.ln() - (r * r * (x * x + y * y) - 2.0 * r * x * y) / (2.0 * d)
    }

    fn h1(&self, v: f64, u: f64) -> f64 {
        norm_cdf((norm_quantile(v) - self.rho * norm_quantile(u)) / self.scale())
    }

    fn h2(&self, u: f64, v: f64) -> f64 {
        self.h1(u, v)
    }

    fn h1_inverse_closed(&self, q: f64, u: f64) -> Option<f64> {
        Some(norm_cdf(self.rho * norm_quantile(u) + self.scale() * norm_quantile(q)))
    }

    fn h2_inverse_closed(&self, q: f64, v: f64) -> Option<f64> {
        self.h1_inverse_closed(q, v)
    }

    fn cdf_grid(&self, us: &[f64], vs: &[f64]) -> Vec<f64> {
        let ys: Vec<f64> = vs.iter().map(|&v| norm_quantile(v)).collect();
        let scale = self.scale();
        super::integrate_h1_grid(us, vs, norm_quantile, |&x, j| {
            norm_cdf((ys[j] - self.rho * x) / scale)
        })
    }
}
