//! Sequential simulation and one-step conditional distributions.
//!
//! A `VineState` holds, for the next stacked position i, the lagged-side
//! conditionals u_{i-r|i-1} for r = 1..=min(i-1, depth). Each new value is
//! drawn by pushing a uniform innovation back through the chain of
//! h1-inverses, and the state is then advanced with h2.

use super::{ConditionalGrid, DVineSpec, LoglikResult};
use crate::bicop::open_uniform;
use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct VineState {
    /// Number of stacked values observed so far.
    count: usize,
    /// lagged[r-1] = u_{i-r|i-1} for the next position i.
    pub(super) lagged: Vec<f64>,
}

impl VineState {
    pub fn empty() -> Self {
        VineState {
            count: 0,
            lagged: Vec::new(),
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// State after observing the stacked series whose likelihood pass
    /// produced `res`.
    pub fn from_loglik(spec: &DVineSpec, stacked: &[f64], res: &LoglikResult) -> Self {
        Self::from_grid(spec, stacked, &res.grid, stacked.len())
    }

    /// State after the first `count` stacked values, read off a grid
    /// computed on a longer series (row i only depends on values <= i).
    pub fn from_grid(
        spec: &DVineSpec,
        stacked: &[f64],
        grid: &ConditionalGrid,
        count: usize,
    ) -> Self {
        let mut lagged = Vec::with_capacity(spec.depth());
        if count > 0 {
            lagged.push(stacked[count - 1]);
            for r in 1..spec.depth().min(count) {
                lagged.push(grid.get(count - 1, r, 1));
            }
        }
        VineState { count, lagged }
    }

    /// State after observing `stacked`, built by sequential updates.
    pub fn from_history(spec: &DVineSpec, stacked: &[f64]) -> Result<Self> {
        let mut st = VineState::empty();
        // only the last depth values can influence the next position, but
        // their conditionals depend on everything inside the Markov window
        let window = spec.depth() * 2 + spec.m();
        let start = stacked.len().saturating_sub(window);
        let start = start - start % spec.m();
        for &x in &stacked[start..] {
            st.observe(spec, x)?;
        }
        st.count = stacked.len();
        Ok(st)
    }

    /// Forward chain x_0 = u → x_K: the conditional CDF of the next value.
    pub fn conditional_cdf(&self, spec: &DVineSpec, u: f64) -> f64 {
        let i = self.count + 1;
        let mut x = u;
        for r in 1..=self.lagged.len() {
            if let Some(pair) = spec.stacked_pair(i, r) {
                x = pair.h1_unchecked(x, self.lagged[r - 1]);
            }
        }
        x
    }

    /// Inverse of `conditional_cdf`.
    pub fn conditional_quantile(&self, spec: &DVineSpec, q: f64) -> Result<f64> {
        let i = self.count + 1;
        let mut x = q;
        for r in (1..=self.lagged.len()).rev() {
            if let Some(pair) = spec.stacked_pair(i, r) {
                x = pair.h1_inverse(x, self.lagged[r - 1])?;
            }
        }
        Ok(x)
    }

    /// Appends the observed value `u` at the next stacked position.
    pub fn observe(&mut self, spec: &DVineSpec, u: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::domain(format!("copula datum {u} outside [0,1]")));
        }
        let i = self.count + 1;
        let depth = spec.depth();
        let k_max = self.lagged.len();
        let mut next = Vec::with_capacity(depth.min(i));
        next.push(u);
        // current-side conditional u_{i|i-r+1} walks forward with r
        let mut current = u;
        for r in 1..=k_max.min(depth - 1) {
            let lag = self.lagged[r - 1];
            let (h1, h2) = match spec.stacked_pair(i, r) {
                Some(pair) => {
                    let (_, h1, h2) = pair.eval_all(lag, current);
                    (h1, h2)
                }
                None => (current, lag),
            };
            next.push(h2);
            current = h1;
        }
        self.lagged = next;
        self.count = i;
        Ok(())
    }

    /// Draws the next value given innovation `w`, and records it.
    pub fn step(&mut self, spec: &DVineSpec, w: f64) -> Result<f64> {
        let u = self.conditional_quantile(spec, w)?;
        self.observe(spec, u)?;
        Ok(u)
    }
}

impl DVineSpec {
    /// Simulates T time points (T×m values, stacked time-major).
    pub fn simulate_stacked(&self, t_len: usize, seed: u64) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut state = VineState::empty();
        self.simulate_with(&mut state, t_len, &mut rng)
    }

    /// Univariate convenience wrapper around `simulate_stacked`.
    pub fn simulate(&self, t_len: usize, seed: u64) -> Result<Vec<f64>> {
        self.simulate_stacked(t_len, seed)
    }

    /// Simulates T rows of an m-dimensional series.
    pub fn simulate_rows(&self, t_len: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        Ok(self
            .simulate_stacked(t_len, seed)?
            .chunks(self.m())
            .map(|c| c.to_vec())
            .collect())
    }

    /// Continues `state` for T time points using `rng` for the innovations.
    pub fn simulate_with<R: Rng + ?Sized>(
        &self,
        state: &mut VineState,
        t_len: usize,
        rng: &mut R,
    ) -> Result<Vec<f64>> {
        let n = t_len * self.m();
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let w = open_uniform(rng);
            out.push(state.step(self, w)?);
        }
        Ok(out)
    }
}
