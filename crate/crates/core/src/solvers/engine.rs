//! Shared outer loop: evaluate at `z_k`, record, test stationarity, then
//! take the projected step `z_{k+1} = Proj_Z(z_k - α d_k)`.

use std::time::Instant;

use crate::config::SolverConfig;
use crate::error::{check_dim, Result};
use crate::penalty::{project_z, projected_gradient_from};
use crate::problem::ProblemSpec;
use crate::report::{IterateRecord, ResolvedSteps, SolveReport, Termination};
use crate::{all_finite, concat, split, Vector};

/// Iterates with `‖z‖` above this end the run as diverged.
pub const DIVERGENCE_NORM: f64 = 1e12;

/// What an algorithm supplies at `z_k`.
pub(crate) struct Evaluation {
    /// Direction used by the update.
    pub step: Vector,
    /// Gradient behind the reported `G_γ` (equals `step` for deterministic methods).
    pub metric: Vector,
    pub penalty: f64,
    pub penalty_estimated: bool,
    pub penalty_clamped: bool,
    pub inner_iters: usize,
}

/// Initial point from the config (zeros when absent), projected onto `Z`.
pub(crate) fn initial_point(problem: &ProblemSpec, config: &SolverConfig) -> Result<(Vector, Vector)> {
    let x = match &config.x0 {
        Some(v) => Vector::from_vec(v.clone()),
        None => Vector::zeros(problem.dx()),
    };
    let y = match &config.y0 {
        Some(v) => Vector::from_vec(v.clone()),
        None => Vector::zeros(problem.dy()),
    };
    check_dim(problem.dx(), x.len())?;
    check_dim(problem.dy(), y.len())?;
    let z = project_z(problem, &concat(&x, &y))?;
    Ok(split(&z, problem.dx()))
}

pub(crate) struct Clock {
    start: Instant,
    enabled: bool,
}

impl Clock {
    pub fn new(enabled: bool) -> Self {
        Clock { start: Instant::now(), enabled }
    }

    pub fn ns(&self) -> u64 {
        if self.enabled {
            self.start.elapsed().as_nanos().min(u128::from(u64::MAX)) as u64
        } else {
            0
        }
    }
}

pub(crate) fn diverged(z: &Vector) -> bool {
    !all_finite(z) || z.norm() > DIVERGENCE_NORM
}

pub(crate) struct RunSpec<'a> {
    pub algorithm: &'static str,
    pub problem: &'a ProblemSpec,
    pub config: &'a SolverConfig,
    pub alpha: f64,
    pub steps: ResolvedSteps,
    pub notes: Vec<String>,
}

pub(crate) fn run<E>(spec: RunSpec<'_>, mut evaluate: E) -> Result<SolveReport>
where
    E: FnMut(usize, &Vector, &Vector) -> Result<Evaluation>,
{
    let RunSpec { algorithm, problem, config, alpha, steps, notes } = spec;
    let gamma = config.gamma;
    let clock = Clock::new(config.timing);
    let (mut x, mut y) = initial_point(problem, config)?;
    let mut trace = Vec::with_capacity(config.max_iters.min(1 << 16));
    let mut termination = Termination::BudgetExhausted;

    for k in 1..=config.max_iters {
        let eval = evaluate(k, &x, &y)?;
        let g_vec = projected_gradient_from(problem, alpha, &x, &y, &eval.metric)?;
        let f_value = problem.f(&x, &y)?;
        let g_sq = g_vec.norm_squared();
        trace.push(IterateRecord {
            k,
            f_value,
            penalty_value: eval.penalty,
            f_gamma: f_value + gamma * eval.penalty,
            proj_grad_norm_sq: g_sq,
            inner_iters: eval.inner_iters,
            elapsed_ns: clock.ns(),
            x: x.iter().copied().collect(),
            y: y.iter().copied().collect(),
            penalty_estimated: eval.penalty_estimated,
            penalty_clamped: eval.penalty_clamped,
            subproblem_gap: None,
        });
        if !g_sq.is_finite() || !f_value.is_finite() {
            termination = Termination::Diverged;
            break;
        }
        if let Some(tol) = config.tol_proj_grad {
            if g_sq.sqrt() <= tol {
                termination = Termination::StationarityReached;
                break;
            }
        }
        let z = concat(&x, &y);
        let next = project_z(problem, &(&z - &eval.step * alpha))?;
        if diverged(&next) {
            termination = Termination::Diverged;
            break;
        }
        (x, y) = split(&next, problem.dx());
    }

    Ok(SolveReport {
        algorithm: algorithm.to_string(),
        problem: problem.name().to_string(),
        x: x.iter().copied().collect(),
        y: y.iter().copied().collect(),
        trace,
        termination,
        config: config.clone(),
        steps,
        notes,
    })
}
