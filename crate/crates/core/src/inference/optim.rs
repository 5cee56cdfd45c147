//! Thin wrapper over the argmin Nelder–Mead solver.

use argmin::core::{CostFunction, Error as ArgminError, Executor, State, TerminationReason};
use argmin::solver::neldermead::NelderMead;
use std::sync::atomic::{AtomicUsize, Ordering};

/// Objective value returned where the model cannot be evaluated.
pub(crate) const PENALTY: f64 = 1e10;

pub(crate) struct NmResult {
    pub z: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
}

struct Objective<'a, F> {
    f: &'a F,
    evals: &'a AtomicUsize,
}

impl<F: Fn(&[f64]) -> f64> CostFunction for Objective<'_, F> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, z: &Vec<f64>) -> Result<f64, ArgminError> {
        self.evals.fetch_add(1, Ordering::Relaxed);
        let v = (self.f)(z);
        Ok(if v.is_finite() { v } else { PENALTY })
    }
}

/// Minimizes `f` from `z0` with an axis-aligned initial simplex.
pub(crate) fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: &F,
    z0: &[f64],
    step: f64,
    max_iters: u64,
    tol: f64,
) -> NmResult {
    let evals = AtomicUsize::new(0);
    let mut simplex = vec![z0.to_vec()];
    for i in 0..z0.len() {
        let mut v = z0.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(tol)
        .expect("positive tolerance");
    let problem = Objective { f, evals: &evals };
    let run = Executor::new(problem, solver)
        .configure(|s| s.max_iters(max_iters))
        .run();
    match run {
        Ok(res) => {
            let st = res.state();
            let z = st.get_best_param().cloned().unwrap_or_else(|| z0.to_vec());
            let converged = matches!(
                st.get_termination_reason(),
                Some(TerminationReason::SolverConverged)
            );
            NmResult {
                value: st.get_best_cost(),
                z,
                evals: evals.load(Ordering::Relaxed),
                converged,
            }
        }
        Err(_) => NmResult {
            value: f(z0),
            z: z0.to_vec(),
            evals: evals.load(Ordering::Relaxed),
            converged: false,
        },
    }
}
