use serde::{Deserialize, Serialize};

use crate::config::SolverConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    BudgetExhausted,
    StationarityReached,
    Diverged,
}

/// One row of a solver trace, evaluated at the iterate `(x_k, y_k)` the
/// `k`-th update started from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateRecord {
    pub k: usize,
    pub f_value: f64,
    pub penalty_value: f64,
    /// `F_γ` (or `F̃_γ` for the prox-linear solver).
    pub f_gamma: f64,
    /// `‖G_γ‖²`, or `‖𝒢_t‖²` for the prox-linear solver.
    pub proj_grad_norm_sq: f64,
    pub inner_iters: usize,
    pub elapsed_ns: u64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// `v(x)` was estimated by `g(x, ŷ)`.
    pub penalty_estimated: bool,
    /// A roundoff-level negative value-gap was clamped to zero.
    pub penalty_clamped: bool,
    /// Certified subproblem gap (prox-linear only).
    pub subproblem_gap: Option<f64>,
}

/// Step sizes actually used by a run after resolving auto rules.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ResolvedSteps {
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub prox_step: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub algorithm: String,
    pub problem: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub trace: Vec<IterateRecord>,
    pub termination: Termination,
    pub config: SolverConfig,
    pub steps: ResolvedSteps,
    /// Human-readable remarks, e.g. violated rate-bound preconditions.
    pub notes: Vec<String>,
}

impl SolveReport {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn last(&self) -> Option<&IterateRecord> {
        self.trace.last()
    }

    /// `(1/K) Σ_k ‖G(z_k)‖²` over the whole trace.
    pub fn mean_proj_grad_norm_sq(&self) -> Option<f64> {
        if self.trace.is_empty() {
            return None;
        }
        Some(self.trace.iter().map(|r| r.proj_grad_norm_sq).sum::<f64>() / self.trace.len() as f64)
    }

    pub fn min_proj_grad_norm_sq(&self) -> Option<f64> {
        self.trace.iter().map(|r| r.proj_grad_norm_sq).reduce(f64::min)
    }

    pub fn estimated_penalty_rows(&self) -> usize {
        self.trace.iter().filter(|r| r.penalty_estimated).count()
    }

    pub fn clamped_penalty_rows(&self) -> usize {
        self.trace.iter().filter(|r| r.penalty_clamped).count()
    }
}
