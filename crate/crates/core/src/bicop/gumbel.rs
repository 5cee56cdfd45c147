//! Gumbel copula parameterized by Kendall's tau, and its convex
//! combination with the survival (180° rotated) Gumbel.

use super::{Bivariate, ParamBound};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

const NEWTON_TOL: f64 = 1e-10;
const NEWTON_MAX_ITER: usize = 200;

/// Gumbel copula with Kendall's tau in `[0, 1)`; θ = 1/(1-τ).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GumbelTauParams {
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gumbel {
    tau: f64,
    theta: f64,
}

impl Gumbel {
    pub fn new(tau: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&tau) {
            return Err(Error::param(format!("gumbel: tau={tau} not in [0,1)")));
        }
        Ok(Gumbel {
            tau,
            theta: 1.0 / (1.0 - tau),
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// ln(x^θ + y^θ) without overflow.
    #[inline]
    fn ln_a(&self, lx: f64, ly: f64) -> f64 {
        let (hi, lo) = if lx > ly { (lx, ly) } else { (ly, lx) };
        self.theta * hi + (self.theta * (lo - hi)).exp().ln_1p()
    }

    pub fn cdf_closed(&self, u: f64, v: f64) -> f64 {
        if u <= 0.0 || v <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return v;
        }
        if v >= 1.0 {
            return u;
        }
        let lx = (-u.ln()).ln();
        let ly = (-v.ln()).ln();
        (-(self.ln_a(lx, ly) / self.theta).exp()).exp()
    }

    pub fn density(&self, u: f64, v: f64) -> f64 {
        self.ln_density(u, v).exp()
    }

    /// Upper tail-dependence coefficient 2 - 2^{1/θ}.
    pub fn upper_tail(&self) -> f64 {
        2.0 - 2f64.powf(1.0 / self.theta)
    }

    /// Solves h(v|u) = q for v, where h is the derivative of C in u.
    fn h_inverse(&self, q: f64, u: f64) -> f64 {
        if self.theta == 1.0 {
            return q;
        }
        let th = self.theta;
        let x = -u.ln();
        // ln q = -z + (1-θ) ln z + (θ-1) ln x + x, solve for z >= x
        let rhs = x + (th - 1.0) * x.ln() - q.ln();
        let g = |z: f64| z + (th - 1.0) * z.ln() - rhs;
        let mut lo = x;
        let mut hi = x.max(1.0);
        while g(hi) < 0.0 {
            hi *= 2.0;
        }
        let mut z = 0.5 * (lo + hi);
        for _ in 0..NEWTON_MAX_ITER {
            let gz = g(z);
            if gz.abs() < NEWTON_TOL * (1.0 + rhs.abs()) * 1e-3 {
                break;
            }
            if gz > 0.0 {
                hi = z;
            } else {
                lo = z;
            }
            let step = gz / (1.0 + (th - 1.0) / z);
            let mut next = z - step;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - z).abs() <= 1e-15 * z {
                z = next;
                break;
            }
            z = next;
        }
        // y = (z^θ - x^θ)^{1/θ}, computed in logs
        let ln_zt = th * z.ln();
        let ln_xt = th * x.ln();
        let ln_diff = ln_zt + (-(ln_xt - ln_zt).exp()).ln_1p();
        let y = (ln_diff / th).exp();
        (-y).exp()
    }

    pub(crate) fn bounds() -> Vec<ParamBound> {
        vec![ParamBound::new(0.0, 1.0)]
    }
}

impl Bivariate for Gumbel {
    fn ln_density(&self, u: f64, v: f64) -> f64 {
        let x = -u.ln();
        let y = -v.ln();
        if self.theta == 1.0 {
            return 0.0;
        }
        let lx = x.ln();
        let ly = y.ln();
        let th = self.theta;
        let ln_a = self.ln_a(lx, ly);
        let s = (ln_a / th).exp();
        -s + (th - 1.0) * (lx + ly) + x + y + (2.0 / th - 2.0) * ln_a + ((th - 1.0) / s).ln_1p()
    }

    fn cdf(&self, u: f64, v: f64) -> f64 {
        self.cdf_closed(u, v)
    }

    fn h1(&self, v: f64, u: f64) -> f64 {
        if self.theta == 1.0 {
            return v;
        }
        let x = -u.ln();
        let lx = x.ln();
        let ly = (-v.ln()).ln();
        let th = self.theta;
        let ln_a = self.ln_a(lx, ly);
        let s = (ln_a / th).exp();
        (-s + x + (th - 1.0) * lx + (1.0 / th - 1.0) * ln_a).exp().min(1.0)
    }

    fn h2(&self, u: f64, v: f64) -> f64 {
        self.h1(u, v)
    }

    fn h1_inverse_closed(&self, q: f64, u: f64) -> Option<f64> {
        Some(self.h_inverse(q, u))
    }

    fn h2_inverse_closed(&self, q: f64, v: f64) -> Option<f64> {
        Some(self.h_inverse(q, v))
    }

    fn cdf_grid(&self, us: &[f64], vs: &[f64]) -> Vec<f64> {
        us.iter()
            .flat_map(|&u| vs.iter().map(move |&v| self.cdf_closed(u, v)))
            .collect()
    }
}

/// Parameters of the convex Gumbel: δ·Gumbel + (1-δ)·survival Gumbel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvexGumbelParams {
    pub tau: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexGumbel {
    gumbel: Gumbel,
    delta: f64,
}

impl ConvexGumbel {
    pub fn new(tau: f64, delta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::param(format!("convex gumbel: delta={delta} not in [0,1]")));
        }
        Ok(ConvexGumbel {
            gumbel: Gumbel::new(tau)?,
            delta,
        })
    }

    pub fn params(&self) -> ConvexGumbelParams {
        ConvexGumbelParams {
            tau: self.gumbel.tau,
            delta: self.delta,
        }
    }

    pub fn gumbel(&self) -> &Gumbel {
        &self.gumbel
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn cdf_closed(&self, u: f64, v: f64) -> f64 {
        if u <= 0.0 || v <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return v;
        }
        if v >= 1.0 {
            return u;
        }
        let d = self.delta;
        d * self.gumbel.cdf_closed(u, v)
            + (1.0 - d) * (u + v - 1.0 + self.gumbel.cdf_closed(1.0 - u, 1.0 - v))
    }

    pub(crate) fn bounds() -> Vec<ParamBound> {
        vec![ParamBound::new(0.0, 1.0), ParamBound::new(0.0, 1.0)]
    }
}

impl Bivariate for ConvexGumbel {
    fn ln_density(&self, u: f64, v: f64) -> f64 {
        let d = self.delta;
        let a = if d > 0.0 { d * self.gumbel.density(u, v) } else { 0.0 };
        let b = if d < 1.0 {
            (1.0 - d) * self.gumbel.density(1.0 - u, 1.0 - v)
        } else {
            0.0
        };
        (a + b).ln()
    }

    fn cdf(&self, u: f64, v: f64) -> f64 {
        self.cdf_closed(u, v)
    }

    fn h1(&self, v: f64, u: f64) -> f64 {
        let d = self.delta;
        d * self.gumbel.h1(v, u) + (1.0 - d) * (1.0 - self.gumbel.h1(1.0 - v, 1.0 - u))
    }

    fn h2(&self, u: f64, v: f64) -> f64 {
        let d = self.delta;
        d * self.gumbel.h2(u, v) + (1.0 - d) * (1.0 - self.gumbel.h2(1.0 - u, 1.0 - v))
    }

    fn h1_inverse_closed(&self, q: f64, u: f64) -> Option<f64> {
        if self.delta == 1.0 {
            Some(self.gumbel.h_inverse(q, u))
        } else if self.delta == 0.0 {
            Some(1.0 - self.gumbel.h_inverse(1.0 - q, 1.0 - u))
        } else {
            None
        }
    }

    fn h2_inverse_closed(&self, q: f64, v: f64) -> Option<f64> {
        self.h1_inverse_closed(q, v)
    }

    fn cdf_grid(&self, us: &[f64], vs: &[f64]) -> Vec<f64> {
        us.iter()
            .flat_map(|&u| vs.iter().map(move |&v| self.cdf_closed(u, v)))
            .collect()
    }
}
