use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::penalty::PenaltyKind;

/// Number of inner lower-level iterations per outer step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum InnerSchedule {
    Fixed { iters: usize },
    /// `T_k` from [`crate::inner::inner_iteration_schedule`]; needs `mu` and `l_g`.
    Logarithmic,
}

/// All solver tunables. `alpha`/`beta`/`prox_step` left as `None` are filled
/// from the problem constants when `auto_steps` is set; explicit values
/// always win.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub gamma: f64,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub auto_steps: bool,
    /// Outer iteration budget `K`.
    pub max_iters: usize,
    pub inner_schedule: InnerSchedule,
    /// Stop once `‖G_γ‖ <= tol`. `None` always runs the full budget.
    pub tol_proj_grad: Option<f64>,
    pub penalty: PenaltyKind,
    /// Minibatch size `M` for the stochastic solver.
    pub batch_size: usize,
    pub seed: u64,
    /// Prox-linear subproblem tolerances `δ_k = delta0 / (k+1)^q`.
    pub delta0: f64,
    pub delta_exponent: f64,
    /// Prox-linear step `t`.
    pub prox_step: Option<f64>,
    /// Iteration cap for each certified prox-linear subproblem solve.
    pub subproblem_max_iters: usize,
    /// Start inner solves at the current `y_k` (otherwise at the initial `y`).
    pub warm_start: bool,
    pub x0: Option<Vec<f64>>,
    pub y0: Option<Vec<f64>>,
    /// Record wall-clock time per trace row. Off by default so traces of
    /// seeded runs are byte-identical.
    pub timing: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            gamma: 10.0,
            alpha: None,
            beta: None,
            auto_steps: true,
            max_iters: 10_000,
            inner_schedule: InnerSchedule::Logarithmic,
            tol_proj_grad: Some(1e-8),
            penalty: PenaltyKind::ValueGap,
            batch_size: 1,
            seed: 0,
            delta0: 1e-2,
            delta_exponent: 2.0,
            prox_step: None,
            subproblem_max_iters: 200_000,
            warm_start: true,
            x0: None,
            y0: None,
            timing: false,
        }
    }
}

impl SolverConfig {
    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_start(mut self, x0: Vec<f64>, y0: Vec<f64>) -> Self {
        self.x0 = Some(x0);
        self.y0 = Some(y0);
        self
    }

    /// Checks shared by every outer solver.
    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidConfig("solvers require gamma > 0".into()));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("prox_step", self.prox_step)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(Error::InvalidConfig(format!("{name} must be > 0")));
                }
            }
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be >= 1".into()));
        }
        if let Some(tol) = self.tol_proj_grad {
            if !(tol >= 0.0) {
                return Err(Error::InvalidConfig("tol_proj_grad must be >= 0".into()));
            }
        }
        Ok(())
    }

    /// `δ_k` for the prox-linear subproblem at outer index `k` (from 0).
    pub fn subproblem_tolerance(&self, k: usize) -> f64 {
        self.delta0 / ((k + 1) as f64).powf(self.delta_exponent)
    }
}
