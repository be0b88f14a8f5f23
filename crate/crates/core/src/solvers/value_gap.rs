use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::inner::{lower_gd, lower_projected_gd, ScheduleMode};
use crate::penalty::{penalized_gradient_value_gap, value_gap_reading};
use crate::problem::ProblemSpec;
use crate::report::{ResolvedSteps, SolveReport};

use super::engine::{self, Evaluation, RunSpec};
use super::{constant, estimated_note, resolve_step, InnerPlan};

/// V-PBGD: value-gap penalty, `ŷ_k` from warm-started inner GD, and
/// `∇v(x_k)` replaced by `∇_x g(x_k, ŷ_k)`.
///
/// Auto steps: `α = 1/(L_f + γ(2L_g + L_g² μ))`, `β = 1/L_g`.
pub fn v_pbgd(problem: &ProblemSpec, config: &SolverConfig) -> Result<SolveReport> {
    if !problem.lower_unconstrained() {
        return Err(Error::InvalidConfig(
            "v-pbgd needs an unconstrained lower level; use v-pbgd-constrained".into(),
        ));
    }
    run_unconstrained(problem, config, "v-pbgd")
}

/// V-PBGD with a constrained lower level: projected inner GD and outer
/// projection onto `C × U`.
///
/// Auto steps: `α = 1/(L_f + γ(L_g + L_v))`, `β = 1/L_g`.
pub fn v_pbgd_constrained(problem: &ProblemSpec, config: &SolverConfig) -> Result<SolveReport> {
    run_constrained(problem, config, "v-pbgd-constrained")
}

pub(super) fn run_unconstrained(problem: &ProblemSpec, config: &SolverConfig, name: &'static str) -> Result<SolveReport> {
    config.validate()?;
    let c = problem.constants();
    let gamma = config.gamma;
    let alpha = resolve_step(config.alpha, config.auto_steps, "alpha", || {
        let (l_f, l_g, mu) = (constant(c.l_f, "l_f")?, constant(c.l_g, "l_g")?, constant(c.mu, "mu")?);
        Ok(1.0 / (l_f + gamma * (2.0 * l_g + l_g * l_g * mu)))
    })?;
    let beta = resolve_step(config.beta, config.auto_steps, "beta", || Ok(1.0 / constant(c.l_g, "l_g")?))?;
    let notes = auto_notes(problem, config, &["l_f", "l_g", "mu"]);
    let plan = InnerPlan::new(problem, config, alpha, beta, ScheduleMode::Unconstrained)?;
    run_value_gap(problem, config, name, alpha, beta, plan, notes, false)
}

pub(super) fn run_constrained(problem: &ProblemSpec, config: &SolverConfig, name: &'static str) -> Result<SolveReport> {
    config.validate()?;
    if !problem.lower_set().is_bounded() {
        return Err(Error::InvalidConfig("the constrained solver needs a bounded lower-level set".into()));
    }
    let c = problem.constants();
    let gamma = config.gamma;
    let alpha = resolve_step(config.alpha, config.auto_steps, "alpha", || {
        let (l_f, l_g, l_v) = (constant(c.l_f, "l_f")?, constant(c.l_g, "l_g")?, constant(c.l_v, "l_v")?);
        Ok(1.0 / (l_f + gamma * (l_g + l_v)))
    })?;
    let beta = resolve_step(config.beta, config.auto_steps, "beta", || Ok(1.0 / constant(c.l_g, "l_g")?))?;
    let notes = auto_notes(problem, config, &["l_f", "l_g", "l_v"]);
    let plan = InnerPlan::new(problem, config, alpha, beta, ScheduleMode::Constrained)?;
    run_value_gap(problem, config, name, alpha, beta, plan, notes, true)
}

fn auto_notes(problem: &ProblemSpec, config: &SolverConfig, used: &[&str]) -> Vec<String> {
    if config.auto_steps && (config.alpha.is_none() || config.beta.is_none()) {
        estimated_note(problem, used).into_iter().collect()
    } else {
        Vec::new()
    }
}

#[allow(clippy::too_many_arguments)]
fn run_value_gap(
    problem: &ProblemSpec,
    config: &SolverConfig,
    name: &'static str,
    alpha: f64,
    beta: f64,
    plan: InnerPlan,
    notes: Vec<String>,
    projected: bool,
) -> Result<SolveReport> {
    let gamma = config.gamma;
    let (_, y_first) = engine::initial_point(problem, config)?;
    let spec = RunSpec {
        algorithm: name,
        problem,
        config,
        alpha,
        steps: ResolvedSteps { alpha: Some(alpha), beta: Some(beta), prox_step: None },
        notes,
    };
    engine::run(spec, |k, x, y| {
        let start = if config.warm_start { y } else { &y_first };
        let iters = plan.iters(k)?;
        let inner = if projected {
            lower_projected_gd(problem, x, start, beta, iters)?
        } else {
            lower_gd(problem, x, start, beta, iters)?
        };
        let grad = penalized_gradient_value_gap(problem, gamma, x, y, &inner.y_hat)?;
        let reading = value_gap_reading(problem, x, y, Some(&inner.y_hat))?;
        Ok(Evaluation {
            step: grad.clone(),
            metric: grad,
            penalty: reading.value,
            penalty_estimated: reading.estimated,
            penalty_clamped: reading.clamped,
            inner_iters: inner.iters,
        })
    })
}
