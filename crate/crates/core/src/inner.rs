//! Lower-level solvers producing the approximate solution `ŷ` used by the
//! value-gap methods, and the logarithmic inner iteration schedule.

use rand::Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::Distribution;

use crate::error::{check_dim, Error, Result};
use crate::problem::ProblemSpec;
use crate::{all_finite, Vector};

/// Inner iterates with a norm above this abort the solve.
pub const DIVERGENCE_NORM: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct InnerResult {
    pub y_hat: Vector,
    pub iters: usize,
    /// `g(x, ŷ) - v(x)` when the problem has an analytic `v`.
    pub final_lower_gap: Option<f64>,
    /// `‖∇_y g(x, ŷ)‖`, or the projected-gradient norm for constrained solves.
    pub final_grad_norm: f64,
}

fn guard(step: usize, w: &Vector, last: &Vector) -> Result<()> {
    if !all_finite(w) || w.norm() > DIVERGENCE_NORM {
        return Err(Error::Diverged { step, last: last.clone() });
    }
    Ok(())
}

fn finish(problem: &ProblemSpec, x: &Vector, y_hat: Vector, iters: usize, grad_norm: f64) -> Result<InnerResult> {
    let final_lower_gap = match problem.lower_value(x) {
        Some(v) => Some(problem.g(x, &y_hat)? - v),
        None => None,
    };
    Ok(InnerResult { y_hat, iters, final_lower_gap, final_grad_norm: grad_norm })
}

fn check_inputs(problem: &ProblemSpec, x: &Vector, y0: &Vector, beta: f64) -> Result<()> {
    check_dim(problem.dx(), x.len())?;
    check_dim(problem.dy(), y0.len())?;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::InvalidArgument("inner step beta must be > 0".into()));
    }
    Ok(())
}

/// `T` gradient steps `ω_{t+1} = ω_t - β∇_y g(x, ω_t)` from `ω_1 = y0`.
pub fn lower_gd(problem: &ProblemSpec, x: &Vector, y0: &Vector, beta: f64, iters: usize) -> Result<InnerResult> {
    check_inputs(problem, x, y0, beta)?;
    if !problem.lower_unconstrained() {
        return Err(Error::InvalidArgument("lower_gd needs an unconstrained lower level".into()));
    }
    let mut w = y0.clone();
    for t in 0..iters {
        let next = &w - problem.g_grad_y(x, &w)? * beta;
        guard(t + 1, &next, &w)?;
        w = next;
    }
    let gnorm = problem.g_grad_y(x, &w)?.norm();
    finish(problem, x, w, iters, gnorm)
}

/// `T` projected steps `ω_{t+1} = Proj_U(ω_t - β∇_y g(x, ω_t))`.
pub fn lower_projected_gd(
    problem: &ProblemSpec,
    x: &Vector,
    y0: &Vector,
    beta: f64,
    iters: usize,
) -> Result<InnerResult> {
    check_inputs(problem, x, y0, beta)?;
    let set = problem.lower_set();
    let mut w = set.project(y0)?;
    for t in 0..iters {
        let next = set.project(&(&w - problem.g_grad_y(x, &w)? * beta))?;
        guard(t + 1, &next, &w)?;
        w = next;
    }
    let mapped = set.project(&(&w - problem.g_grad_y(x, &w)? * beta))?;
    let gnorm = (&w - mapped).norm() / beta;
    finish(problem, x, w, iters, gnorm)
}

/// Normalized weights `P(i = t) ∝ β_t = 1/(L_g √t)` for `t = 1..T`.
pub fn sgd_output_weights(iters: usize, l_g: f64) -> Vec<f64> {
    let raw: Vec<f64> = (1..=iters).map(|t| 1.0 / (l_g * (t as f64).sqrt())).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|b| b / total).collect()
}

/// Stochastic inner loop with `β_t = 1/(L_g √t)`. Runs `T` steps from
/// `ω_1 = y0` and returns `ω_i` with `i ∈ {1..T}` drawn with probability
/// proportional to `β_i`. Each step draws one sample id from `rng`.
pub fn lower_sgd_weighted<R: Rng + ?Sized>(
    problem: &ProblemSpec,
    x: &Vector,
    y0: &Vector,
    iters: usize,
    l_g: f64,
    rng: &mut R,
) -> Result<InnerResult> {
    check_inputs(problem, x, y0, 1.0 / l_g)?;
    if !problem.has_stochastic_oracles() {
        return Err(Error::MissingOracle("g_grad_sample"));
    }
    if iters == 0 {
        let gnorm = problem.g_grad_y(x, y0)?.norm();
        return finish(problem, x, y0.clone(), 0, gnorm);
    }
    let pick = WeightedIndex::new(sgd_output_weights(iters, l_g))
        .map_err(|e| Error::InvalidArgument(e.to_string()))?
        .sample(rng);
    let dx = problem.dx();
    let mut w = y0.clone();
    let mut chosen = w.clone();
    for t in 1..=iters {
        if t - 1 == pick {
            chosen = w.clone();
        }
        let sample: u64 = rng.random();
        let grad = problem.g_grad_sample(x, &w, sample)?;
        let beta_t = 1.0 / (l_g * (t as f64).sqrt());
        let next = &w - grad.rows(dx, problem.dy()) * beta_t;
        guard(t, &next, &w)?;
        w = next;
    }
    let gnorm = problem.g_grad_y(x, &chosen)?.norm();
    finish(problem, x, chosen, iters, gnorm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleMode {
    Unconstrained,
    Constrained,
}

/// `T_k = ceil(max{-log_c(16 L_g²), -2 log_c(2αk)})` with `c = 1 - β/(2μ)`;
/// the constrained mode uses `2αγk` in the second term. Floored at 1.
#[allow(clippy::too_many_arguments)]
pub fn inner_iteration_schedule(
    k: usize,
    alpha: f64,
    beta: f64,
    gamma: f64,
    mu: f64,
    l_g: f64,
    mode: ScheduleMode,
) -> Result<usize> {
    let c = 1.0 - beta / (2.0 * mu);
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::InvalidArgument(format!("contraction factor {c} must lie in (0, 1)")));
    }
    let log_c = |v: f64| v.ln() / c.ln();
    let scale = match mode {
        ScheduleMode::Unconstrained => 2.0 * alpha * k as f64,
        ScheduleMode::Constrained => 2.0 * alpha * gamma * k as f64,
    };
    let first = -log_c(16.0 * l_g * l_g);
    let second = if scale > 0.0 { -2.0 * log_c(scale) } else { f64::NEG_INFINITY };
    let t = first.max(second).ceil();
    Ok(if t.is_finite() && t >= 1.0 { t as usize } else { 1 })
}
