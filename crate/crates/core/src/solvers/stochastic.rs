use rand::Rng;

use crate::config::{InnerSchedule, SolverConfig};
use crate::error::{Error, Result};
use crate::inner::lower_sgd_weighted;
use crate::penalty::{penalized_gradient_value_gap, value_gap_reading};
use crate::problem::ProblemSpec;
use crate::report::{ResolvedSteps, SolveReport};
use crate::{rng, Vector};

use super::engine::{self, Evaluation, RunSpec};
use super::{constant, estimated_note, resolve_step};

/// V-PBSGD: stochastic inner loop with `β_t = β/√t` and a step-size
/// weighted output index, then a minibatch outer step
///
/// `d_k = (1/M) Σ_i ∇f(z_k; φ_i) + γ(∇g(z_k; ψ_i) - (∇_x g(x_k, ŷ_k; ψ_i), 0))`
///
/// where each `ψ_i` is shared between the two `g` evaluations. `β` defaults
/// to `1/L_g`; `α` follows the V-PBGD auto rule. The inner schedule must be
/// fixed. The reported `G_γ` uses the exact gradient at `ŷ_k`.
pub fn v_pbsgd(problem: &ProblemSpec, config: &SolverConfig) -> Result<SolveReport> {
    config.validate()?;
    if !problem.has_stochastic_oracles() {
        return Err(Error::MissingOracle("g_grad_sample"));
    }
    if !problem.lower_unconstrained() {
        return Err(Error::InvalidConfig("v-pbsgd needs an unconstrained lower level".into()));
    }
    let InnerSchedule::Fixed { iters } = config.inner_schedule else {
        return Err(Error::InvalidConfig("v-pbsgd uses a fixed inner iteration count".into()));
    };
    let c = problem.constants();
    let gamma = config.gamma;
    let alpha = resolve_step(config.alpha, config.auto_steps, "alpha", || {
        let (l_f, l_g, mu) = (constant(c.l_f, "l_f")?, constant(c.l_g, "l_g")?, constant(c.mu, "mu")?);
        Ok(1.0 / (l_f + gamma * (2.0 * l_g + l_g * l_g * mu)))
    })?;
    let beta = resolve_step(config.beta, config.auto_steps, "beta", || Ok(1.0 / constant(c.l_g, "l_g")?))?;
    let l_eff = 1.0 / beta;

    let mut notes = Vec::new();
    if config.auto_steps && (config.alpha.is_none() || config.beta.is_none()) {
        notes.extend(estimated_note(problem, &["l_f", "l_g", "mu"]));
    }
    if let (Some(mu), Some(l_g)) = (c.mu, c.l_g) {
        let sum_sq: f64 = (1..=iters).map(|t| beta * beta / t as f64).sum();
        if sum_sq < 192.0 * mu * l_g * l_g {
            notes.push(format!(
                "inner steps violate sum(beta_t^2) >= 192 mu L_g^2 ({sum_sq:.3e} < {:.3e})",
                192.0 * mu * l_g * l_g
            ));
        }
    }

    let (_, y_first) = engine::initial_point(problem, config)?;
    let mut outer = rng::substream(config.seed, rng::OUTER, 0);
    let dx = problem.dx();
    let m = config.batch_size;
    let spec = RunSpec {
        algorithm: "v-pbsgd",
        problem,
        config,
        alpha,
        steps: ResolvedSteps { alpha: Some(alpha), beta: Some(beta), prox_step: None },
        notes,
    };
    engine::run(spec, |k, x, y| {
        let start = if config.warm_start { y } else { &y_first };
        let mut inner_rng = rng::substream(config.seed, rng::INNER, k as u64);
        let inner = lower_sgd_weighted(problem, x, start, iters, l_eff, &mut inner_rng)?;
        let y_hat = &inner.y_hat;

        let mut step = Vector::zeros(dx + problem.dy());
        for _ in 0..m {
            let (phi, psi): (u64, u64) = (outer.random(), outer.random());
            let mut d = problem.f_grad_sample(x, y, phi)? + problem.g_grad_sample(x, y, psi)? * gamma;
            let at_hat = problem.g_grad_sample(x, y_hat, psi)?;
            d.rows_mut(0, dx).axpy(-gamma, &at_hat.rows(0, dx), 1.0);
            step += d;
        }
        if m > 1 {
            step /= m as f64;
        }

        let metric = penalized_gradient_value_gap(problem, gamma, x, y, y_hat)?;
        let reading = value_gap_reading(problem, x, y, Some(y_hat))?;
        Ok(Evaluation {
            step,
            metric,
            penalty: reading.value,
            penalty_estimated: reading.estimated,
            penalty_clamped: reading.clamped,
            inner_iters: inner.iters,
        })
    })
}
