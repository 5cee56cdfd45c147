//! Maps between constrained copula parameters and unconstrained reals.
//!
//! Every parameter lives in an interval (lo, hi) and is mapped through the
//! scaled logit z = ln((x - lo) / (hi - x)). Degrees of freedom use the
//! same map on (2, ν_max).

use crate::bicop::ParamBound;
use crate::dvine::DVineSpec;
use crate::error::Result;

/// Relative distance from an interval end at which natural values are
/// pulled inside before taking the logit.
const EDGE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ParamTransform {
    bounds: Vec<ParamBound>,
}

impl ParamTransform {
    pub fn new(bounds: Vec<ParamBound>) -> Self {
        ParamTransform { bounds }
    }

    /// Transform for the concatenated parameters of every pair in `spec`.
    pub fn for_spec(spec: &DVineSpec) -> Self {
        Self::new(spec.families().iter().flat_map(|f| f.bounds()).collect())
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn bounds(&self) -> &[ParamBound] {
        &self.bounds
    }

    pub fn to_unconstrained(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.bounds)
            .map(|(&x, b)| {
                let e = EDGE * b.width();
                let x = x.clamp(b.lo + e, b.hi - e);
                ((x - b.lo) / (b.hi - x)).ln()
            })
            .collect()
    }

    pub fn to_constrained(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(&self.bounds)
            .map(|(&z, b)| {
                if z >= 0.0 {
                    b.lo + b.width() / (1.0 + (-z).exp())
                } else {
                    let e = z.exp();
                    b.lo + b.width() * e / (1.0 + e)
                }
            })
            .collect()
    }

    /// dx/dz for every coordinate.
    pub fn jacobian(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(&self.bounds)
            .map(|(&z, b)| {
                let s = 1.0 / (1.0 + (-z).exp());
                b.width() * s * (1.0 - s)
            })
            .collect()
    }

    /// ln |dx/dz|, the log-density of a flat prior on x expressed in z.
    pub fn ln_jacobian(&self, z: &[f64]) -> f64 {
        z.iter()
            .zip(&self.bounds)
            .map(|(&z, b)| {
                // ln s + ln(1-s) = -|z| - 2 ln(1 + e^{-|z|})
                b.width().ln() - z.abs() - 2.0 * (-z.abs()).exp().ln_1p()
            })
            .sum()
    }

    pub fn spec_at(&self, template: &DVineSpec, z: &[f64]) -> Result<DVineSpec> {
        template.with_params_flat(&self.to_constrained(z))
    }
}
