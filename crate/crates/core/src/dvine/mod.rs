//! Stationary D-vine copulas for Markov-p time series.
//!
//! For a univariate series the vine has one pair-copula per lag. For an
//! m-dimensional series the observations are stacked by time and then by
//! variable (index i = l + m(t-1)) and the pair linking stacked positions
//! j < i depends only on the lag k = t - s and the variable labels
//! (l2, l1) of j and i. Pairs with k > p are independence copulas.

mod loglik;
mod simulate;

pub use loglik::{loglik, loglik_multi, loglik_uni, loglik_value, LoglikResult};
pub use simulate::VineState;

use crate::bicop::{Family, PairCopula};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Number of distinct pair-copulas in a vine of dimension `m` and order `p`.
pub fn pair_count(m: usize, p: usize) -> usize {
    if m == 1 {
        p
    } else {
        p * m * m + m * (m - 1) / 2
    }
}

/// Position of c^{(k)}_{l2,l1} in the pair list (labels are 1-based).
///
/// Cross-sectional pairs (k = 0, l2 < l1) come first, then for each lag k
/// an m×m block ordered by l2 and then l1.
pub fn pair_index(m: usize, k: usize, l1: usize, l2: usize) -> usize {
    if k == 0 {
        debug_assert!(l2 < l1);
        (l1 - 1) * (l1 - 2) / 2 + (l2 - 1)
    } else {
        m * (m - 1) / 2 + (k - 1) * m * m + (l2 - 1) * m + (l1 - 1)
    }
}

/// Labels (k, l1, l2) of every pair in storage order.
pub fn pair_labels(m: usize, p: usize) -> Vec<(usize, usize, usize)> {
    let mut out = vec![(0, 0, 0); pair_count(m, p)];
    for l1 in 2..=m {
        for l2 in 1..l1 {
            out[pair_index(m, 0, l1, l2)] = (0, l1, l2);
        }
    }
    for k in 1..=p {
        for l2 in 1..=m {
            for l1 in 1..=m {
                out[pair_index(m, k, l1, l2)] = (k, l1, l2);
            }
        }
    }
    out
}

/// A stationary D-vine: dimension, Markov order and the unique pair-copulas.
#[derive(Debug, Clone, PartialEq)]
pub struct DVineSpec {
    m: usize,
    p: usize,
    pairs: Vec<PairCopula>,
}

impl DVineSpec {
    pub fn new(m: usize, p: usize, pairs: Vec<PairCopula>) -> Result<Self> {
        if m == 0 || p == 0 {
            return Err(Error::param("vine needs m >= 1 and p >= 1"));
        }
        let need = pair_count(m, p);
        if pairs.len() != need {
            return Err(Error::param(format!(
                "vine with m={m}, p={p} needs {need} pair-copulas, got {}",
                pairs.len()
            )));
        }
        Ok(DVineSpec { m, p, pairs })
    }

    /// Univariate Markov-p vine with `pairs[k-1]` linking lag k.
    pub fn univariate(pairs: Vec<PairCopula>) -> Result<Self> {
        let p = pairs.len();
        Self::new(1, p, pairs)
    }

    /// Every pair set to the same copula.
    pub fn uniform(m: usize, p: usize, copula: PairCopula) -> Result<Self> {
        Self::new(m, p, vec![copula; pair_count(m, p)])
    }

    pub fn independence(m: usize, p: usize) -> Self {
        Self::uniform(m, p, PairCopula::Independence).expect("m, p >= 1")
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn pairs(&self) -> &[PairCopula] {
        &self.pairs
    }

    pub fn pairs_mut(&mut self) -> &mut [PairCopula] {
        &mut self.pairs
    }

    /// c^{(k)}_{l2,l1}; for m = 1 use `pair(k, 1, 1)`.
    pub fn pair(&self, k: usize, l1: usize, l2: usize) -> &PairCopula {
        &self.pairs[pair_index(self.m, k, l1, l2)]
    }

    /// Number of columns r of the stacked conditional grid.
    pub fn depth(&self) -> usize {
        (self.p + 1) * self.m - 1
    }

    /// Pair linking stacked positions j = i - r and i (1-based), or `None`
    /// when the lag exceeds p.
    #[inline]
    pub(crate) fn stacked_pair(&self, i: usize, r: usize) -> Option<&PairCopula> {
        self.stacked_pair_index(i, r).map(|idx| &self.pairs[idx])
    }

    /// Storage index of the pair used by `stacked_pair`.
    #[inline]
    pub(crate) fn stacked_pair_index(&self, i: usize, r: usize) -> Option<usize> {
        let m = self.m;
        let j = i - r;
        let t = i.div_ceil(m);
        let s = j.div_ceil(m);
        let k = t - s;
        if k > self.p {
            return None;
        }
        let l1 = i - m * (t - 1);
        let l2 = j - m * (s - 1);
        Some(pair_index(m, k, l1, l2))
    }

    pub fn labels(&self) -> Vec<(usize, usize, usize)> {
        pair_labels(self.m, self.p)
    }

    /// Concatenated parameter vectors of all pairs.
    pub fn params_flat(&self) -> Vec<f64> {
        self.pairs.iter().flat_map(|c| c.params()).collect()
    }

    /// Same structure and families with new parameters.
    pub fn with_params_flat(&self, theta: &[f64]) -> Result<Self> {
        let mut off = 0;
        let mut pairs = Vec::with_capacity(self.pairs.len());
        for c in &self.pairs {
            let n = c.family().param_names().len();
            if off + n > theta.len() {
                return Err(Error::param("parameter vector too short"));
            }
            pairs.push(c.with_params(&theta[off..off + n])?);
            off += n;
        }
        if off != theta.len() {
            return Err(Error::param("parameter vector too long"));
        }
        Ok(DVineSpec {
            m: self.m,
            p: self.p,
            pairs,
        })
    }

    pub fn families(&self) -> Vec<Family> {
        self.pairs.iter().map(|c| c.family()).collect()
    }
}

/// Conditional arguments produced by the likelihood recursion, stored as
/// a (rows × depth × 2) array. Side 0 holds u_{i|j} (current given lagged),
/// side 1 holds u_{j|i}. Cells whose conditioning set would reach before
/// the first observation are NaN.
#[derive(Debug, Clone)]
pub struct ConditionalGrid {
    rows: usize,
    depth: usize,
    data: Vec<f64>,
}

impl ConditionalGrid {
    pub(crate) fn new(rows: usize, depth: usize) -> Self {
        ConditionalGrid {
            rows,
            depth,
            data: vec![f64::NAN; rows * depth * 2],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Value at row `i` (0-based), column `r` (1-based lag in stacked
    /// positions) and side 0/1.
    #[inline]
    pub fn get(&self, i: usize, r: usize, side: usize) -> f64 {
        self.data[(i * self.depth + (r - 1)) * 2 + side]
    }

    /// Raw storage, row-major over (row, column, side).
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Bitwise equality (NaN cells compare equal).
    pub fn same_bits(&self, other: &ConditionalGrid) -> bool {
        self.rows == other.rows
            && self.depth == other.depth
            && self
                .data
                .iter()
                .zip(&other.data)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    #[inline]
    pub(crate) fn set(&mut self, i: usize, r: usize, side: usize, v: f64) {
        self.data[(i * self.depth + (r - 1)) * 2 + side] = v;
    }
}

#[derive(Serialize, Deserialize)]
struct PairEntry {
    k: usize,
    l1: usize,
    l2: usize,
    #[serde(flatten)]
    copula: PairCopula,
}

#[derive(Serialize, Deserialize)]
struct SpecRepr {
    m: usize,
    p: usize,
    pairs: Vec<PairEntry>,
}

impl Serialize for DVineSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs = self
            .labels()
            .into_iter()
            .zip(&self.pairs)
            .map(|((k, l1, l2), c)| PairEntry {
                k,
                l1,
                l2,
                copula: *c,
            })
            .collect();
        SpecRepr {
            m: self.m,
            p: self.p,
            pairs,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DVineSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let r = SpecRepr::deserialize(d)?;
        if r.m == 0 || r.p == 0 {
            return Err(D::Error::custom("m and p must be >= 1"));
        }
        let n = pair_count(r.m, r.p);
        let mut slots: Vec<Option<PairCopula>> = vec![None; n];
        for e in r.pairs {
            let valid = if e.k == 0 {
                e.l2 >= 1 && e.l2 < e.l1 && e.l1 <= r.m
            } else {
                e.k <= r.p && (1..=r.m).contains(&e.l1) && (1..=r.m).contains(&e.l2)
            };
            if !valid {
                return Err(D::Error::custom(format!(
                    "invalid pair label k={}, l1={}, l2={}",
                    e.k, e.l1, e.l2
                )));
            }
            let idx = pair_index(r.m, e.k, e.l1, e.l2);
            if slots[idx].replace(e.copula).is_some() {
                return Err(D::Error::custom(format!(
                    "duplicate pair k={}, l1={}, l2={}",
                    e.k, e.l1, e.l2
                )));
            }
        }
        let pairs: Option<Vec<PairCopula>> = slots.into_iter().collect();
        let pairs = pairs.ok_or_else(|| D::Error::custom("missing pair-copulas"))?;
        DVineSpec::new(r.m, r.p, pairs).map_err(D::Error::custom)
    }
}
