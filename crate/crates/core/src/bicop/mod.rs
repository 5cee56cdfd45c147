//! Bivariate parametric copulas and their h-functions.
//!
//! Argument conventions: `h1(v, u)` is P(V <= v | U = u) = ∂C/∂u and
//! `h2(u, v)` is P(U <= u | V = v) = ∂C/∂v. The mixture family combines a
//! component copula with a 90° rotation of a second component of the same
//! family, so in general h1 and h2 differ.

mod gumbel;
mod tcop;

pub use gumbel::{ConvexGumbel, ConvexGumbelParams, Gumbel, GumbelTauParams};
pub use tcop::{GaussianCopula, TCopula, TCopulaParams};

use crate::error::{Error, Result};
use crate::quad::{integrate_adaptive, GaussLegendre};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Cap on the t-copula degrees of freedom.
pub const NU_MAX: f64 = 40.0;

/// Inputs are clamped to `[CLAMP_EPS, 1 - CLAMP_EPS]` before evaluation.
pub const CLAMP_EPS: f64 = 1e-10;

const INV_TOL: f64 = 1e-10;
const INV_MAX_ITER: usize = 200;
const SPEARMAN_NODES: usize = 200;

#[inline]
pub(crate) fn clamp_unit(x: f64) -> f64 {
    x.clamp(CLAMP_EPS, 1.0 - CLAMP_EPS)
}

fn check_unit(name: &str, x: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(Error::domain(format!("{name}={x} outside [0,1]")))
    }
}

/// Open or half-open interval a scalar parameter lives in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamBound {
    pub lo: f64,
    pub hi: f64,
}

impl ParamBound {
    pub const fn new(lo: f64, hi: f64) -> Self {
        ParamBound { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

/// Evaluation interface shared by the concrete families. All inputs are
/// assumed already clamped to the open unit square.
pub(crate) trait Bivariate {
    fn ln_density(&self, u: f64, v: f64) -> f64;
    fn h1(&self, v: f64, u: f64) -> f64;
    fn h2(&self, u: f64, v: f64) -> f64;

    fn cdf(&self, u: f64, v: f64) -> f64 {
        let (val, _) = integrate_adaptive(|s| self.h1(v, clamp_unit(s)), 0.0, u, 1e-13);
        val.clamp(0.0, u.min(v))
    }

    fn h1_inverse_closed(&self, _q: f64, _u: f64) -> Option<f64> {
        None
    }

    fn h2_inverse_closed(&self, _q: f64, _v: f64) -> Option<f64> {
        None
    }

    /// C(us[i], vs[j]) in row-major order.
    fn cdf_grid(&self, us: &[f64], vs: &[f64]) -> Vec<f64>;

    /// (ln c(u,v), h1(v|u), h2(u|v)) in one pass.
    fn eval_all(&self, u: f64, v: f64) -> (f64, f64, f64) {
        (self.ln_density(u, v), self.h1(v, u), self.h2(u, v))
    }

    /// `eval_all(1 - u, v)`; families with a reflection identity override
    /// this to avoid the cancellation in `1 - u`.
    fn eval_all_reflected(&self, u: f64, v: f64) -> (f64, f64, f64) {
        self.eval_all(clamp_unit(1.0 - u), v)
    }
}

/// Breakpoints for the cumulative panel rule used by `integrate_h1_grid`.
fn panel_breaks(us: &[f64]) -> Vec<f64> {
    let mut b: Vec<f64> = Vec::with_capacity(us.len() + 140);
    for i in 0..=64 {
        b.push(i as f64 / 64.0);
    }
    for k in 7..=34 {
        let e = 0.5f64.powi(k);
        b.push(e);
        b.push(1.0 - e);
    }
    b.extend(us.iter().copied().filter(|&u| u > 0.0 && u < 1.0));
    b.sort_by(|a, c| a.partial_cmp(c).unwrap());
    b.dedup_by(|a, c| (*a - *c).abs() < 1e-15);
    b
}

const PANEL_GL: [(f64, f64); 5] = [
    (0.046_910_077_030_668_0, 0.118_463_442_528_094_5),
    (0.230_765_344_947_158_5, 0.239_314_335_249_683_2),
    (0.5, 0.284_444_444_444_444_4),
    (0.769_234_655_052_841_5, 0.239_314_335_249_683_2),
    (0.953_089_922_969_332_0, 0.118_463_442_528_094_5),
];

/// Computes C(u_i, v_j) = ∫_0^{u_i} h1(v_j | s) ds for all pairs by a
/// cumulative composite Gauss–Legendre rule whose panels include every
/// requested u. `prep` precomputes per-node state; `h(state, j)` returns
/// h1(v_j | s).
pub(crate) fn integrate_h1_grid<P>(
    us: &[f64],
    vs: &[f64],
    prep: impl Fn(f64) -> P,
    h: impl Fn(&P, usize) -> f64,
) -> Vec<f64> {
    let breaks = panel_breaks(us);
    let mut nodes = Vec::with_capacity((breaks.len() - 1) * PANEL_GL.len());
    let mut weights = Vec::with_capacity(nodes.capacity());
    let mut node_end = Vec::with_capacity(breaks.len());
    node_end.push(0usize);
    for win in breaks.windows(2) {
        let (a, b) = (win[0], win[1]);
        for &(x, w) in &PANEL_GL {
            nodes.push(prep(a + (b - a) * x));
            weights.push(w * (b - a));
        }
        node_end.push(nodes.len());
    }
    let cut: Vec<usize> = us
        .iter()
        .map(|&u| {
            if u <= 0.0 {
                0
            } else if u >= 1.0 {
                nodes.len()
            } else {
                let idx = breaks.partition_point(|&b| b < u - 1e-15);
                node_end[idx.min(node_end.len() - 1)]
            }
        })
        .collect();
    let mut out = vec![0.0; us.len() * vs.len()];
    let mut prefix = vec![0.0; nodes.len() + 1];
    for (j, &v) in vs.iter().enumerate() {
        if v <= 0.0 {
            continue;
        }
        if v >= 1.0 {
            for (i, &u) in us.iter().enumerate() {
                out[i * vs.len() + j] = u.clamp(0.0, 1.0);
            }
            continue;
        }
        let mut acc = 0.0;
        for (n, node) in nodes.iter().enumerate() {
            acc += weights[n] * h(node, j);
            prefix[n + 1] = acc;
        }
        for (i, &u) in us.iter().enumerate() {
            out[i * vs.len() + j] = if u >= 1.0 {
                v
            } else {
                prefix[cut[i]].clamp(0.0, u.min(v).max(0.0))
            };
        }
    }
    out
}

/// Component families allowed inside a mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Component {
    T(TCopula),
    ConvexGumbel(ConvexGumbel),
}

impl Component {
    fn same_family(&self, other: &Component) -> bool {
        matches!(
            (self, other),
            (Component::T(_), Component::T(_)) | (Component::ConvexGumbel(_), Component::ConvexGumbel(_))
        )
    }

    fn as_dyn(&self) -> &dyn Bivariate {
        match self {
            Component::T(c) => c,
            Component::ConvexGumbel(c) => c,
        }
    }
}

/// w·c^a(u,v) + (1-w)·c^b(1-u,v).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mixture {
    w: f64,
    a: Component,
    b: Component,
}

impl Mixture {
    pub fn new(w: f64, a: Component, b: Component) -> Result<Self> {
        if !(w > 0.0 && w < 1.0) {
            return Err(Error::param(format!("mixture: w={w} not in (0,1)")));
        }
        if !a.same_family(&b) {
            return Err(Error::param("mixture components must share a family"));
        }
        Ok(Mixture { w, a, b })
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn component_a(&self) -> &Component {
        &self.a
    }

    pub fn component_b(&self) -> &Component {
        &self.b
    }

    /// Same copula written with weight 1-w and the components swapped,
    /// evaluated at (1-u, v).
    pub fn swapped(&self) -> Mixture {
        Mixture {
            w: 1.0 - self.w,
            a: self.b,
            b: self.a,
        }
    }

    #[inline]
    fn combine(&self, ea: (f64, f64, f64), eb: (f64, f64, f64)) -> (f64, f64, f64) {
        let w = self.w;
        let la = w.ln() + ea.0;
        let lb = (1.0 - w).ln() + eb.0;
        let (hi, lo) = if la > lb { (la, lb) } else { (lb, la) };
        let ln_c = if hi == f64::NEG_INFINITY {
            hi
        } else {
            hi + (lo - hi).exp().ln_1p()
        };
        (ln_c, w * ea.1 + (1.0 - w) * eb.1, w * ea.2 + (1.0 - w) * (1.0 - eb.2))
    }
}

impl Bivariate for Mixture {
    fn ln_density(&self, u: f64, v: f64) -> f64 {
        self.eval_all(u, v).0
    }

    fn h1(&self, v: f64, u: f64) -> f64 {
        let w = self.w;
        w * self.a.as_dyn().h1(v, u) + (1.0 - w) * self.b.as_dyn().h1(v, clamp_unit(1.0 - u))
    }

    fn h2(&self, u: f64, v: f64) -> f64 {
        let w = self.w;
        w * self.a.as_dyn().h2(u, v)
            + (1.0 - w) * (1.0 - self.b.as_dyn().h2(clamp_unit(1.0 - u), v))
    }

    fn cdf(&self, u: f64, v: f64) -> f64 {
        let w = self.w;
        let ca = self.a.as_dyn().cdf(u, v);
        let cb = self.b.as_dyn().cdf(1.0 - u, v);
        (w * ca + (1.0 - w) * (v - cb)).clamp(0.0, u.min(v))
    }

    fn cdf_grid(&self, us: &[f64], vs: &[f64]) -> Vec<f64> {
        let w = self.w;
        let ga = self.a.as_dyn().cdf_grid(us, vs);
        let flipped: Vec<f64> = us.iter().map(|&u| 1.0 - u).collect();
        let gb = self.b.as_dyn().cdf_grid(&flipped, vs);
        let n = vs.len();
        ga.iter()
            .zip(&gb)
            .enumerate()
            .map(|(idx, (&ca, &cb))| {
                let u = us[idx / n];
                let v = vs[idx % n];
                (w * ca + (1.0 - w) * (v - cb)).clamp(0.0, u.min(v).max(0.0))
            })
            .collect()
    }

    fn eval_all(&self, u: f64, v: f64) -> (f64, f64, f64) {
        let ea = self.a.as_dyn().eval_all(u, v);
        let eb = self.b.as_dyn().eval_all_reflected(u, v);
        self.combine(ea, eb)
    }
}

/// A parametric bivariate copula.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PairCopulaRepr", into = "PairCopulaRepr")]
pub enum PairCopula {
    Independence,
    Gaussian(GaussianCopula),
    T(TCopula),
    Gumbel(Gumbel),
    ConvexGumbel(ConvexGumbel),
    Mixture(Mixture),
}

/// Family tags as used in model files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Independence,
    Gaussian,
    T,
    Gumbel,
    ConvexGumbel,
    MixtureT,
    MixtureConvexGumbel,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Independence => "independence",
            Family::Gaussian => "gaussian",
            Family::T => "t",
            Family::Gumbel => "gumbel",
            Family::ConvexGumbel => "convex_gumbel",
            Family::MixtureT => "mixture_t",
            Family::MixtureConvexGumbel => "mixture_convex_gumbel",
        }
    }

    pub fn param_names(&self) -> &'static [&'static str] {
        match self {
            Family::Independence => &[],
            Family::Gaussian => &["rho"],
            Family::T => &["zeta", "nu"],
            Family::Gumbel => &["tau"],
            Family::ConvexGumbel => &["tau", "delta"],
            Family::MixtureT => &["w", "zeta_a", "nu_a", "zeta_b", "nu_b"],
            Family::MixtureConvexGumbel => &["w", "tau_a", "delta_a", "tau_b", "delta_b"],
        }
    }

    /// Constraint interval per parameter, in `param_names` order.
    pub fn bounds(&self) -> Vec<ParamBound> {
        let unit = ParamBound::new(0.0, 1.0);
        match self {
            Family::Independence => vec![],
            Family::Gaussian => vec![ParamBound::new(-1.0, 1.0)],
            Family::T => TCopula::bounds(),
            Family::Gumbel => Gumbel::bounds(),
            Family::ConvexGumbel => ConvexGumbel::bounds(),
            Family::MixtureT => {
                let mut b = vec![unit];
                b.extend(TCopula::bounds());
                b.extend(TCopula::bounds());
                b
            }
            Family::MixtureConvexGumbel => {
                let mut b = vec![unit];
                b.extend(ConvexGumbel::bounds());
                b.extend(ConvexGumbel::bounds());
                b
            }
        }
    }

    /// Builds a copula of this family from a parameter vector.
    pub fn build(&self, p: &[f64]) -> Result<PairCopula> {
        let need = self.param_names().len();
        if p.len() != need {
            return Err(Error::param(format!(
                "{}: expected {need} parameters, got {}",
                self.name(),
                p.len()
            )));
        }
        match self {
            Family::Independence => Ok(PairCopula::Independence),
            Family::Gaussian => PairCopula::gaussian(p[0]),
            Family::T => PairCopula::t(p[0], p[1]),
            Family::Gumbel => PairCopula::gumbel(p[0]),
            Family::ConvexGumbel => PairCopula::convex_gumbel(p[0], p[1]),
            Family::MixtureT => PairCopula::mixture_t(p[0], p[1], p[2], p[3], p[4]),
            Family::MixtureConvexGumbel => {
                PairCopula::mixture_convex_gumbel(p[0], p[1], p[2], p[3], p[4])
            }
        }
    }

    pub fn independence_params(&self) -> Vec<f64> {
        match self {
            Family::Independence => vec![],
            Family::Gaussian => vec![0.0],
            Family::T => vec![0.0, NU_MAX],
            Family::Gumbel => vec![0.0],
            Family::ConvexGumbel => vec![0.0, 0.5],
            Family::MixtureT => vec![0.5, 0.0, NU_MAX, 0.0, NU_MAX],
            Family::MixtureConvexGumbel => vec![0.5, 0.0, 0.5, 0.0, 0.5],
        }
    }
}

impl std::str::FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "independence" => Family::Independence,
            "gaussian" => Family::Gaussian,
            "t" => Family::T,
            "gumbel" => Family::Gumbel,
            "convex_gumbel" => Family::ConvexGumbel,
            "mixture_t" | "A" | "a" => Family::MixtureT,
            "mixture_convex_gumbel" | "B" | "b" => Family::MixtureConvexGumbel,
            other => return Err(Error::param(format!("unknown copula family '{other}'"))),
        })
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl PairCopula {
    pub fn independence() -> Self {
        PairCopula::Independence
    }

    pub fn gaussian(rho: f64) -> Result<Self> {
        Ok(PairCopula::Gaussian(GaussianCopula::new(rho)?))
    }

    pub fn t(zeta: f64, nu: f64) -> Result<Self> {
        Ok(PairCopula::T(TCopula::new(zeta, nu)?))
    }

    pub fn gumbel(tau: f64) -> Result<Self> {
        Ok(PairCopula::Gumbel(Gumbel::new(tau)?))
    }

    pub fn convex_gumbel(tau: f64, delta: f64) -> Result<Self> {
        Ok(PairCopula::ConvexGumbel(ConvexGumbel::new(tau, delta)?))
    }

    pub fn mixture_t(w: f64, zeta_a: f64, nu_a: f64, zeta_b: f64, nu_b: f64) -> Result<Self> {
        Ok(PairCopula::Mixture(Mixture::new(
            w,
            Component::T(TCopula::new(zeta_a, nu_a)?),
            Component::T(TCopula::new(zeta_b, nu_b)?),
        )?))
    }

    pub fn mixture_convex_gumbel(
        w: f64,
        tau_a: f64,
        delta_a: f64,
        tau_b: f64,
        delta_b: f64,
    ) -> Result<Self> {
        Ok(PairCopula::Mixture(Mixture::new(
            w,
            Component::ConvexGumbel(ConvexGumbel::new(tau_a, delta_a)?),
            Component::ConvexGumbel(ConvexGumbel::new(tau_b, delta_b)?),
        )?))
    }

    pub fn family(&self) -> Family {
        match self {
            PairCopula::Independence => Family::Independence,
            PairCopula::Gaussian(_) => Family::Gaussian,
            PairCopula::T(_) => Family::T,
            PairCopula::Gumbel(_) => Family::Gumbel,
            PairCopula::ConvexGumbel(_) => Family::ConvexGumbel,
            PairCopula::Mixture(m) => match m.a {
                Component::T(_) => Family::MixtureT,
                Component::ConvexGumbel(_) => Family::MixtureConvexGumbel,
            },
        }
    }

    /// Parameter vector in `Family::param_names` order.
    pub fn params(&self) -> Vec<f64> {
        match self {
            PairCopula::Independence => vec![],
            PairCopula::Gaussian(g) => vec![g.rho],
            PairCopula::T(t) => vec![t.zeta(), t.nu()],
            PairCopula::Gumbel(g) => vec![g.tau()],
            PairCopula::ConvexGumbel(c) => vec![c.gumbel().tau(), c.delta()],
            PairCopula::Mixture(m) => {
                let mut p = vec![m.w];
                for comp in [&m.a, &m.b] {
                    match comp {
                        Component::T(t) => p.extend([t.zeta(), t.nu()]),
                        Component::ConvexGumbel(c) => p.extend([c.gumbel().tau(), c.delta()]),
                    }
                }
                p
            }
        }
    }

    /// Same family with a new parameter vector.
    pub fn with_params(&self, p: &[f64]) -> Result<Self> {
        self.family().build(p)
    }

    fn as_dyn(&self) -> &dyn Bivariate {
        match self {
            PairCopula::Independence => &IndependenceImpl,
            PairCopula::Gaussian(c) => c,
            PairCopula::T(c) => c,
            PairCopula::Gumbel(c) => c,
            PairCopula::ConvexGumbel(c) => c,
            PairCopula::Mixture(c) => c,
        }
    }

    /// True when the two h-functions coincide (exchangeable copula).
    pub fn is_exchangeable(&self) -> bool {
        self.family() != Family::MixtureConvexGumbel
    }

    pub fn density(&self, u: f64, v: f64) -> Result<f64> {
        Ok(self.ln_density(u, v)?.exp())
    }

    pub fn ln_density(&self, u: f64, v: f64) -> Result<f64> {
        let u = clamp_unit(check_unit("u", u)?);
        let v = clamp_unit(check_unit("v", v)?);
        Ok(self.as_dyn().ln_density(u, v))
    }

    pub fn cdf(&self, u: f64, v: f64) -> Result<f64> {
        let u = check_unit("u", u)?;
        let v = check_unit("v", v)?;
        if u == 0.0 || v == 0.0 {
            return Ok(0.0);
        }
        if u == 1.0 {
            return Ok(v);
        }
        if v == 1.0 {
            return Ok(u);
        }
        Ok(self.as_dyn().cdf(u, v))
    }

    /// P(V <= v | U = u).
    pub fn h1(&self, v: f64, u: f64) -> Result<f64> {
        let v = check_unit("v", v)?;
        let u = check_unit("u", u)?;
        Ok(self.h1_unchecked(v, u))
    }

    /// P(U <= u | V = v).
    pub fn h2(&self, u: f64, v: f64) -> Result<f64> {
        let u = check_unit("u", u)?;
        let v = check_unit("v", v)?;
        Ok(self.h2_unchecked(u, v))
    }

    #[inline]
    pub(crate) fn h1_unchecked(&self, v: f64, u: f64) -> f64 {
        if v <= 0.0 {
            return 0.0;
        }
        if v >= 1.0 {
            return 1.0;
        }
        self.as_dyn().h1(clamp_unit(v), clamp_unit(u)).clamp(0.0, 1.0)
    }

    #[inline]
    pub(crate) fn h2_unchecked(&self, u: f64, v: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        self.as_dyn().h2(clamp_unit(u), clamp_unit(v)).clamp(0.0, 1.0)
    }

    /// (ln c(u,v), h1(v|u), h2(u|v)) for inputs in [0,1]; used by the vine
    /// recursions.
    #[inline]
    pub(crate) fn eval_all(&self, u: f64, v: f64) -> (f64, f64, f64) {
        let (l, a, b) = self.as_dyn().eval_all(clamp_unit(u), clamp_unit(v));
        (l, a.clamp(0.0, 1.0), b.clamp(0.0, 1.0))
    }

    /// Like `eval_all`, with both arguments taken from `table`'s data at
    /// positions `ia` (first argument) and `ib`. When `need_h` is false the
    /// h-function entries are NaN.
    #[inline]
    pub(crate) fn eval_scored(
        &self,
        table: &ScoreTable,
        ia: usize,
        ib: usize,
        need_h: bool,
    ) -> (f64, f64, f64) {
        fn t_terms(
            c: &TCopula,
            s: &[f64],
            ia: usize,
            ib: usize,
            flip: bool,
            need_h: bool,
        ) -> (f64, f64, f64) {
            let x = if flip { -s[ia] } else { s[ia] };
            let y = s[ib];
            let l = c.ln_density_scores(x, y);
            if need_h {
                (l, c.h_scores(y, x), c.h_scores(x, y))
            } else {
                (l, f64::NAN, f64::NAN)
            }
        }
        let out = match self {
            PairCopula::T(c) => table
                .get(c.nu())
                .map(|s| t_terms(c, s, ia, ib, false, need_h)),
            PairCopula::Mixture(m) => match (&m.a, &m.b) {
                (Component::T(a), Component::T(b)) => {
                    match (table.get(a.nu()), table.get(b.nu())) {
                        (Some(sa), Some(sb)) => Some(m.combine(
                            t_terms(a, sa, ia, ib, false, need_h),
                            t_terms(b, sb, ia, ib, true, need_h),
                        )),
                        _ => None,
                    }
                }
                _ => None,
            },
            _ => None,
        };
        match out {
            Some((l, a, b)) => (l, a.clamp(0.0, 1.0), b.clamp(0.0, 1.0)),
            None => self.eval_all(table.data[ia], table.data[ib]),
        }
    }

    /// Degrees of freedom whose t scores `eval_scored` can use.
    pub(crate) fn score_dofs(&self) -> Vec<f64> {
        match self {
            PairCopula::T(c) => vec![c.nu()],
            PairCopula::Mixture(m) => match (&m.a, &m.b) {
                (Component::T(a), Component::T(b)) => vec![a.nu(), b.nu()],
                _ => vec![],
            },
            _ => vec![],
        }
    }

    /// Solves h1(v|u) = q for v.
    pub fn h1_inverse(&self, q: f64, u: f64) -> Result<f64> {
        let q = check_unit("q", q)?;
        let u = clamp_unit(check_unit("u", u)?);
        if let Some(v) = self.as_dyn().h1_inverse_closed(clamp_unit(q), u) {
            return Ok(v.clamp(0.0, 1.0));
        }
        let me = self.as_dyn();
        solve_monotone(
            q,
            |v| me.h1(v, u),
            |v| me.ln_density(u, v).exp(),
            "h1 inverse",
        )
    }

    /// Solves h2(u|v) = q for u.
    pub fn h2_inverse(&self, q: f64, v: f64) -> Result<f64> {
        let q = check_unit("q", q)?;
        let v = clamp_unit(check_unit("v", v)?);
        if let Some(u) = self.as_dyn().h2_inverse_closed(clamp_unit(q), v) {
            return Ok(u.clamp(0.0, 1.0));
        }
        let me = self.as_dyn();
        solve_monotone(
            q,
            |u| me.h2(u, v),
            |u| me.ln_density(u, v).exp(),
            "h2 inverse",
        )
    }

    /// C on the tensor grid `us × vs`, row-major in `us`.
    pub fn cdf_grid(&self, us: &[f64], vs: &[f64]) -> Vec<f64> {
        self.as_dyn().cdf_grid(us, vs)
    }

    /// Spearman's rho, 12∬C - 3, by a 200×200 Gauss–Legendre rule.
    pub fn spearman_rho(&self) -> f64 {
        if let PairCopula::Independence = self {
            return 0.0;
        }
        let gl = GaussLegendre::new(SPEARMAN_NODES);
        let grid = self.cdf_grid(&gl.nodes, &gl.nodes);
        let n = gl.len();
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                s += gl.weights[i] * gl.weights[j] * grid[i * n + j];
            }
        }
        (12.0 * s - 3.0).clamp(-1.0, 1.0)
    }

    /// Limits of λ_low(α) and λ_up(α) as α → 0.
    pub fn tail_dependence(&self) -> (f64, f64) {
        fn comp_diag(c: &Component) -> (f64, f64) {
            match c {
                Component::T(t) => {
                    let l = TCopula::tail_coefficient(t.zeta(), t.nu());
                    (l, l)
                }
                Component::ConvexGumbel(g) => {
                    let l = g.gumbel().upper_tail();
                    ((1.0 - g.delta()) * l, g.delta() * l)
                }
            }
        }
        // mass the rotated component puts in the (low, low) and (high, high)
        // corners comes from its off-diagonal corners
        fn comp_anti(c: &Component) -> f64 {
            match c {
                Component::T(t) => TCopula::tail_coefficient(-t.zeta(), t.nu()),
                Component::ConvexGumbel(_) => 0.0,
            }
        }
        match self {
            PairCopula::Independence | PairCopula::Gaussian(_) => (0.0, 0.0),
            PairCopula::T(t) => {
                let l = TCopula::tail_coefficient(t.zeta(), t.nu());
                (l, l)
            }
            PairCopula::Gumbel(g) => (0.0, g.upper_tail()),
            PairCopula::ConvexGumbel(g) => {
                let l = g.gumbel().upper_tail();
                ((1.0 - g.delta()) * l, g.delta() * l)
            }
            PairCopula::Mixture(m) => {
                let (la, ua) = comp_diag(&m.a);
                let b = comp_anti(&m.b);
                (m.w * la + (1.0 - m.w) * b, m.w * ua + (1.0 - m.w) * b)
            }
        }
    }

    /// `n` i.i.d. pairs by conditional inversion.
    pub fn sample_pair(&self, n: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let u = open_uniform(&mut rng);
            let q = open_uniform(&mut rng);
            out.push((u, self.h1_inverse(q, u)?));
        }
        Ok(out)
    }
}

/// Student t quantiles of a fixed data vector for a few degrees of
/// freedom, shared by every pair-copula that reads the raw data.
pub(crate) struct ScoreTable<'a> {
    data: &'a [f64],
    tables: Vec<(f64, Vec<f64>)>,
}

impl<'a> ScoreTable<'a> {
    pub(crate) fn build<'c>(data: &'a [f64], copulas: impl Iterator<Item = &'c PairCopula>) -> Self {
        use rayon::prelude::*;
        let mut nus: Vec<f64> = copulas.flat_map(|c| c.score_dofs()).collect();
        nus.sort_by(f64::total_cmp);
        nus.dedup();
        let tables = nus
            .into_iter()
            .map(|nu| {
                let t = crate::special::StudentT::new(nu);
                let s = data.par_iter().map(|&u| t.quantile(clamp_unit(u))).collect();
                (nu, s)
            })
            .collect();
        ScoreTable { data, tables }
    }

    #[inline]
    fn get(&self, nu: f64) -> Option<&[f64]> {
        self.tables
            .iter()
            .find(|(n, _)| *n == nu)
            .map(|(_, s)| s.as_slice())
    }
}

/// Uniform draw on the open unit interval.
#[inline]
pub(crate) fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let x: f64 = rng.random();
        if x > 0.0 {
            return x;
        }
    }
}

struct IndependenceImpl;

impl Bivariate for IndependenceImpl {
    fn ln_density(&self, _u: f64, _v: f64) -> f64 {
        0.0
    }
    fn h1(&self, v: f64, _u: f64) -> f64 {
        v
    }
    fn h2(&self, u: f64, _v: f64) -> f64 {
        u
    }
    fn cdf(&self, u: f64, v: f64) -> f64 {
        u * v
    }
    fn h1_inverse_closed(&self, q: f64, _u: f64) -> Option<f64> {
        Some(q)
    }
    fn h2_inverse_closed(&self, q: f64, _v: f64) -> Option<f64> {
        Some(q)
    }
    fn cdf_grid(&self, us: &[f64], vs: &[f64]) -> Vec<f64> {
        us.iter()
            .flat_map(|&u| vs.iter().map(move |&v| u * v))
            .collect()
    }
}

/// Safeguarded Newton iteration for a nondecreasing map `f: (0,1) → [0,1]`
/// with derivative `df`, bracketed by bisection.
fn solve_monotone(
    q: f64,
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    what: &str,
) -> Result<f64> {
    let mut lo = CLAMP_EPS;
    let mut hi = 1.0 - CLAMP_EPS;
    if q <= f(lo) {
        return Ok(if q <= 0.0 { 0.0 } else { lo });
    }
    if q >= f(hi) {
        return Ok(if q >= 1.0 { 1.0 } else { hi });
    }
    let mut x = q.clamp(lo, hi);
    let mut r = f(x) - q;
    for _ in 0..INV_MAX_ITER {
        if r.abs() < 1e-15 {
            return Ok(x);
        }
        if r > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        if hi - lo <= 1e-16 * hi.max(1e-300) {
            break;
        }
        let d = df(x);
        let mut next = x - r / d;
        if !(next.is_finite() && next > lo && next < hi) {
            // bisect in log space near 0, linear elsewhere
            next = if lo > 0.0 && hi < 0.1 {
                (lo * hi).sqrt()
            } else {
                0.5 * (lo + hi)
            };
        }
        x = next;
        r = f(x) - q;
    }
    if r.abs() < INV_TOL {
        Ok(x)
    } else {
        Err(Error::Numerical {
            what: what.to_string(),
            residual: r.abs(),
        })
    }
}

/// Flat serialized form of a copula: `{"family": ..., "params": {...}}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", content = "params", rename_all = "snake_case")]
enum PairCopulaRepr {
    Independence,
    Gaussian {
        rho: f64,
    },
    T(TCopulaParams),
    Gumbel(GumbelTauParams),
    ConvexGumbel(ConvexGumbelParams),
    MixtureT {
        w: f64,
        zeta_a: f64,
        nu_a: f64,
        zeta_b: f64,
        nu_b: f64,
    },
    MixtureConvexGumbel {
        w: f64,
        tau_a: f64,
        delta_a: f64,
        tau_b: f64,
        delta_b: f64,
    },
}

impl TryFrom<PairCopulaRepr> for PairCopula {
    type Error = Error;

    fn try_from(r: PairCopulaRepr) -> Result<Self> {
        match r {
            PairCopulaRepr::Independence => Ok(PairCopula::Independence),
            PairCopulaRepr::Gaussian { rho } => PairCopula::gaussian(rho),
            PairCopulaRepr::T(p) => PairCopula::t(p.zeta, p.nu),
            PairCopulaRepr::Gumbel(p) => PairCopula::gumbel(p.tau),
            PairCopulaRepr::ConvexGumbel(p) => PairCopula::convex_gumbel(p.tau, p.delta),
            PairCopulaRepr::MixtureT {
                w,
                zeta_a,
                nu_a,
                zeta_b,
                nu_b,
            } => PairCopula::mixture_t(w, zeta_a, nu_a, zeta_b, nu_b),
            PairCopulaRepr::MixtureConvexGumbel {
                w,
                tau_a,
                delta_a,
                tau_b,
                delta_b,
            } => PairCopula::mixture_convex_gumbel(w, tau_a, delta_a, tau_b, delta_b),
        }
    }
}

impl From<PairCopula> for PairCopulaRepr {
    fn from(c: PairCopula) -> Self {
        let p = c.params();
        match c.family() {
            Family::Independence => PairCopulaRepr::Independence,
            Family::Gaussian => PairCopulaRepr::Gaussian { rho: p[0] },
            Family::T => PairCopulaRepr::T(TCopulaParams { zeta: p[0], nu: p[1] }),
            Family::Gumbel => PairCopulaRepr::Gumbel(GumbelTauParams { tau: p[0] }),
            Family::ConvexGumbel => PairCopulaRepr::ConvexGumbel(ConvexGumbelParams {
                tau: p[0],
                delta: p[1],
            }),
            Family::MixtureT => PairCopulaRepr::MixtureT {
                w: p[0],
                zeta_a: p[1],
                nu_a: p[2],
                zeta_b: p[3],
                nu_b: p[4],
            },
            Family::MixtureConvexGumbel => PairCopulaRepr::MixtureConvexGumbel {
                w: p[0],
                tau_a: p[1],
                delta_a: p[2],
                tau_b: p[3],
                delta_b: p[4],
            },
        }
    }
}

#[cfg(test)]
mod tests;
