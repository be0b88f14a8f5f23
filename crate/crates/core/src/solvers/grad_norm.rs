use crate::config::SolverConfig;
use crate::error::{Error, Result};
use crate::penalty::{penalized_gradient_grad_norm_sq, PenaltyKind};
use crate::problem::ProblemSpec;
use crate::report::{ResolvedSteps, SolveReport};

use super::engine::{self, Evaluation, RunSpec};

/// G-PBGD: projected gradient on `f + γ‖∇_y g‖²` with the exact penalty
/// gradient and no inner loop. Needs an explicit `alpha`.
pub fn g_pbgd(problem: &ProblemSpec, config: &SolverConfig) -> Result<SolveReport> {
    run(problem, config, "g-pbgd")
}

pub(super) fn run(problem: &ProblemSpec, config: &SolverConfig, name: &'static str) -> Result<SolveReport> {
    config.validate()?;
    if !problem.lower_unconstrained() {
        return Err(Error::InvalidConfig("g-pbgd needs an unconstrained lower level".into()));
    }
    if !problem.has_hvp() {
        return Err(Error::MissingOracle("g_hvp_yy / g_hvp_xy"));
    }
    let alpha = config
        .alpha
        .ok_or_else(|| Error::InvalidConfig("g-pbgd has no auto step rule; set alpha".into()))?;
    let gamma = config.gamma;
    let spec = RunSpec {
        algorithm: name,
        problem,
        config,
        alpha,
        steps: ResolvedSteps { alpha: Some(alpha), beta: None, prox_step: None },
        notes: Vec::new(),
    };
    engine::run(spec, |_, x, y| {
        let grad = penalized_gradient_grad_norm_sq(problem, gamma, x, y)?;
        let penalty = crate::penalty::penalty_value(problem, PenaltyKind::GradNormSq, x, y, None)?;
        Ok(Evaluation {
            step: grad.clone(),
            metric: grad,
            penalty,
            penalty_estimated: false,
            penalty_clamped: false,
            inner_iters: 0,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems;
    use std::f64::consts::PI;

    #[test]
    fn intro_trap_point_never_moves() {
        // Curvature of F_γ at the trap is about 2 + 34γ, so α = 1e-4 is stable up to γ = 100.
        for gamma in [1.0, 10.0, 100.0] {
            let cfg = SolverConfig {
                gamma,
                alpha: Some(1e-4),
                max_iters: 200,
                tol_proj_grad: None,
                ..SolverConfig::default()
            }
            .with_start(vec![0.0], vec![2.0 * PI / 3.0]);
            let r = g_pbgd(&problems::example_intro(), &cfg).unwrap();
            assert!((r.y[0] - 2.0 * PI / 3.0).abs() <= 1e-9, "gamma={gamma}: {}", r.y[0]);
        }
    }

    #[test]
    fn intro_basin_of_zero() {
        let cfg = SolverConfig { gamma: 10.0, alpha: Some(2e-3), max_iters: 5000, ..SolverConfig::default() }
            .with_start(vec![0.0], vec![0.5]);
        let r = g_pbgd(&problems::example_intro(), &cfg).unwrap();
        assert!(r.y[0].abs() <= 0.02, "{}", r.y[0]);
    }

    #[test]
    fn quadratic_grad_norm_minimizer() {
        let cfg = SolverConfig { gamma: 10.0, alpha: Some(5e-3), max_iters: 20_000, tol_proj_grad: Some(1e-10), ..SolverConfig::default() }
            .with_start(vec![0.0], vec![1.0]);
        let r = g_pbgd(&problems::quadratic(), &cfg).unwrap();
        assert!((r.y[0] + 0.0125).abs() <= 1e-6, "{}", r.y[0]);
    }

    #[test]
    fn requires_alpha() {
        assert!(matches!(
            g_pbgd(&problems::quadratic(), &SolverConfig::default()),
            Err(Error::InvalidConfig(_))
        ));
    }
}
