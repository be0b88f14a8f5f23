//! Outer penalty-based gradient loops.
//!
//! Every solver records one [`IterateRecord`](crate::IterateRecord) per
//! outer iteration, evaluated at the iterate the update starts from, and
//! stops at the iteration budget or once `‖G_γ‖ <= tol_proj_grad`.

mod engine;
mod grad_norm;
mod stochastic;
mod value_gap;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use engine::DIVERGENCE_NORM;
pub use grad_norm::g_pbgd;
pub use stochastic::v_pbsgd;
pub use value_gap::{v_pbgd, v_pbgd_constrained};

pub(crate) use engine::{diverged, initial_point, Clock};

use crate::config::{InnerSchedule, SolverConfig};
use crate::error::{Error, Result};
use crate::inner::{inner_iteration_schedule, ScheduleMode};
use crate::penalty::PenaltyKind;
use crate::problem::{ProblemSpec, SmoothnessConstants};
use crate::report::SolveReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Pbgd,
    VPbgd,
    #[serde(alias = "v-pbgd-con")]
    VPbgdConstrained,
    GPbgd,
    VPbsgd,
    Pbpl,
}

impl Algorithm {
    pub const ALL: [Algorithm; 6] = [
        Algorithm::Pbgd,
        Algorithm::VPbgd,
        Algorithm::VPbgdConstrained,
        Algorithm::GPbgd,
        Algorithm::VPbsgd,
        Algorithm::Pbpl,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Algorithm::Pbgd => "pbgd",
            Algorithm::VPbgd => "v-pbgd",
            Algorithm::VPbgdConstrained => "v-pbgd-constrained",
            Algorithm::GPbgd => "g-pbgd",
            Algorithm::VPbsgd => "v-pbsgd",
            Algorithm::Pbpl => "pbpl",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let canonical = s.replace('_', "-");
        if canonical == "v-pbgd-con" {
            return Ok(Algorithm::VPbgdConstrained);
        }
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == canonical)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown algorithm `{s}`")))
    }
}

/// Run `algorithm` on `problem`.
pub fn solve(problem: &ProblemSpec, algorithm: Algorithm, config: &SolverConfig) -> Result<SolveReport> {
    match algorithm {
        Algorithm::Pbgd => pbgd(problem, config),
        Algorithm::VPbgd => v_pbgd(problem, config),
        Algorithm::VPbgdConstrained => v_pbgd_constrained(problem, config),
        Algorithm::GPbgd => g_pbgd(problem, config),
        Algorithm::VPbsgd => v_pbsgd(problem, config),
        Algorithm::Pbpl => crate::proxlinear::pbpl(problem, config),
    }
}

/// Generic penalty-based projected gradient: dispatches on `config.penalty`.
/// The value gap uses an inner GD solve (projected when the lower level is
/// constrained); the squared gradient norm uses its exact gradient.
pub fn pbgd(problem: &ProblemSpec, config: &SolverConfig) -> Result<SolveReport> {
    match config.penalty {
        PenaltyKind::ValueGap if problem.lower_unconstrained() => value_gap::run_unconstrained(problem, config, "pbgd"),
        PenaltyKind::ValueGap => value_gap::run_constrained(problem, config, "pbgd"),
        PenaltyKind::GradNormSq => grad_norm::run(problem, config, "pbgd"),
        PenaltyKind::GradNorm => Err(Error::InvalidConfig(
            "the grad-norm penalty is nonsmooth; use the prox-linear solver".into(),
        )),
    }
}

/// Explicit value if given, otherwise the auto rule (when enabled).
pub(crate) fn resolve_step<F>(explicit: Option<f64>, auto: bool, name: &str, rule: F) -> Result<f64>
where
    F: FnOnce() -> Result<f64>,
{
    match (explicit, auto) {
        (Some(v), _) => Ok(v),
        (None, true) => {
            let v = rule()?;
            if v > 0.0 && v.is_finite() {
                Ok(v)
            } else {
                Err(Error::InvalidConfig(format!("auto rule produced invalid {name} = {v}")))
            }
        }
        (None, false) => Err(Error::InvalidConfig(format!("{name} is required when auto_steps is off"))),
    }
}

pub(crate) fn constant(value: Option<f64>, name: &str) -> Result<f64> {
    SmoothnessConstants::require(value, name)
}

/// Note listing estimated constants that fed an auto step rule.
pub(crate) fn estimated_note(problem: &ProblemSpec, used: &[&str]) -> Option<String> {
    let est: Vec<&str> = used.iter().copied().filter(|n| problem.constants().is_estimated(n)).collect();
    (!est.is_empty()).then(|| format!("auto step sizes use estimated constants: {}", est.join(", ")))
}

/// Inner iteration count for outer index `k`.
pub(crate) struct InnerPlan {
    schedule: InnerSchedule,
    alpha: f64,
    beta: f64,
    gamma: f64,
    mu: f64,
    l_g: f64,
    mode: ScheduleMode,
}

impl InnerPlan {
    pub fn new(
        problem: &ProblemSpec,
        config: &SolverConfig,
        alpha: f64,
        beta: f64,
        mode: ScheduleMode,
    ) -> Result<Self> {
        let (mu, l_g) = match config.inner_schedule {
            InnerSchedule::Fixed { .. } => (f64::NAN, f64::NAN),
            InnerSchedule::Logarithmic => {
                let c = problem.constants();
                (constant(c.mu, "mu")?, constant(c.l_g, "l_g")?)
            }
        };
        let plan = InnerPlan { schedule: config.inner_schedule, alpha, beta, gamma: config.gamma, mu, l_g, mode };
        plan.iters(1).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(plan)
    }

    pub fn iters(&self, k: usize) -> Result<usize> {
        match self.schedule {
            InnerSchedule::Fixed { iters } => Ok(iters),
            InnerSchedule::Logarithmic => {
                // β = 2μ makes one step exact (c_β = 0).
                if 1.0 - self.beta / (2.0 * self.mu) == 0.0 {
                    return Ok(1);
                }
                inner_iteration_schedule(k, self.alpha, self.beta, self.gamma, self.mu, self.l_g, self.mode)
            }
        }
    }
}
