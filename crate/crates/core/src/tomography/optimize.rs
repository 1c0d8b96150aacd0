use argmin::core::{CostFunction, Executor, State, TerminationReason, TerminationStatus};
use argmin::solver::neldermead::NelderMead;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Settings for the simplex searches behind the maximum-likelihood fits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleConfig {
    /// Iteration cap per simplex run.
    pub max_iters: u64,
    /// Stop when the spread of simplex objective values falls below this.
    pub tolerance: f64,
    /// Extra runs started from perturbed copies of the best point.
    pub restarts: usize,
    /// Initial simplex edge length.
    pub step: f64,
    pub seed: u64,
}

impl Default for MleConfig {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            tolerance: 1e-15,
            restarts: 2,
            step: 0.05,
            seed: 0,
        }
    }
}

impl MleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be positive".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::InvalidParameter(format!("tolerance {} must be positive", self.tolerance)));
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidParameter(format!("step {} must be positive", self.step)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub params: Vec<f64>,
    pub value: f64,
    pub converged: bool,
}

struct Objective<'a> {
    f: &'a (dyn Fn(&[f64]) -> f64 + Sync),
}

impl CostFunction for Objective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        let v = (self.f)(p);
        Ok(if v.is_finite() { v } else { f64::MAX })
    }
}

fn run_once(f: &(dyn Fn(&[f64]) -> f64 + Sync), x0: &[f64], cfg: &MleConfig) -> Result<Minimum> {
    let mut simplex = vec![x0.to_vec()];
    for i in 0..x0.len() {
        let mut v = x0.to_vec();
        v[i] += cfg.step;
        simplex.push(v);
    }
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(cfg.tolerance)
        .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let res = Executor::new(Objective { f }, solver)
        .configure(|s| s.max_iters(cfg.max_iters))
        .run()
        .map_err(|e| Error::Malformed(format!("optimizer failure: {e}")))?;
    let state = res.state();
    let params = state
        .get_best_param()
        .cloned()
        .unwrap_or_else(|| x0.to_vec());
    let converged = matches!(
        state.get_termination_status(),
        TerminationStatus::Terminated(TerminationReason::SolverConverged)
    );
    Ok(Minimum {
        value: f(&params),
        params,
        converged,
    })
}

/// Nelder-Mead from `x0`, then `cfg.restarts` further runs from the best
/// point jittered by a seeded perturbation of size `cfg.step`. Returns the
/// best point; `converged` is true if any run met the tolerance.
pub fn minimize(f: &(dyn Fn(&[f64]) -> f64 + Sync), x0: &[f64], cfg: &MleConfig) -> Result<Minimum> {
    cfg.validate()?;
    if x0.is_empty() {
        return Err(Error::EmptyInput("parameter vector"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut best = run_once(f, x0, cfg)?;
    let mut any_converged = best.converged;
    for _ in 0..cfg.restarts {
        let start: Vec<f64> = best
            .params
            .iter()
            .map(|x| x + cfg.step * rng.gen_range(-1.0..1.0))
            .collect();
        let m = run_once(f, &start, cfg)?;
        any_converged |= m.converged;
        if m.value < best.value {
            best = m;
        }
    }
    best.converged = any_converged;
    Ok(best)
}
