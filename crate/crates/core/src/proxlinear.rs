//! Prox-linear method for the exact penalty `F̃_γ = f + γ‖∇_y g‖`.
//!
//! Each step minimizes the local model
//!
//! `ℓ(z; z_k) = f(z_k) + ∇f(z_k)ᵀd + γ‖c + A d‖ + ‖d‖²/(2t)`, `d = z - z_k`,
//!
//! with `c = ∇_y g(z_k)` and `A = [∇_yx g, ∇_yy g]` at `z_k`. Subproblems are
//! solved on the dual `max_{‖u‖ <= γ} φ(u)`, where
//!
//! `φ(u) = f(z_k) + ⟨u, c⟩ + min_{z ∈ Z} ⟨∇f + Aᵀu, d⟩ + ‖d‖²/(2t)`
//!
//! and the inner minimum is attained at `z(u) = Proj_Z(z_k - t(∇f + Aᵀu))`.
//! The duality gap `ℓ(z(u)) - φ(u)` certifies the accuracy of every
//! returned point.

use nalgebra::DMatrix;

use crate::config::SolverConfig;
use crate::error::{check_dim, Error, Result};
use crate::penalty::project_z;
use crate::problem::ProblemSpec;
use crate::report::{IterateRecord, ResolvedSteps, SolveReport, Termination};
use crate::solvers::{diverged, initial_point, Clock};
use crate::{concat, split, Vector};

/// Problems with at most this many variables get a dense Jacobian.
pub const DENSE_LIMIT: usize = 512;

/// `A = ∇(∇_y g)` at the anchor, dense or as products.
#[derive(Debug, Clone)]
pub enum Jacobian<'a> {
    Dense(DMatrix<f64>),
    Operator { problem: &'a ProblemSpec, x: Vector, y: Vector },
}

impl Jacobian<'_> {
    /// `A d` for `d ∈ ℝ^{dx+dy}`.
    pub fn apply(&self, d: &Vector) -> Result<Vector> {
        match self {
            Jacobian::Dense(a) => Ok(a * d),
            Jacobian::Operator { problem, x, y } => {
                let (dx_part, dy_part) = split(d, problem.dx());
                Ok(problem.g_hvp_yx(x, y, &dx_part)? + problem.g_hvp_yy(x, y, &dy_part)?)
            }
        }
    }

    /// `Aᵀ u` for `u ∈ ℝ^{dy}`.
    pub fn adjoint(&self, u: &Vector) -> Result<Vector> {
        match self {
            Jacobian::Dense(a) => Ok(a.tr_mul(u)),
            Jacobian::Operator { problem, x, y } => {
                Ok(concat(&problem.g_hvp_xy(x, y, u)?, &problem.g_hvp_yy(x, y, u)?))
            }
        }
    }

    /// Upper bound on `‖A‖²`: Frobenius for dense, padded power iteration otherwise.
    fn norm_sq_bound(&self, dy: usize) -> Result<f64> {
        match self {
            Jacobian::Dense(a) => Ok(a.norm_squared()),
            Jacobian::Operator { .. } => {
                let mut u = Vector::from_element(dy, 1.0 / (dy as f64).sqrt());
                let mut est = 0.0;
                for _ in 0..50 {
                    let w = self.apply(&self.adjoint(&u)?)?;
                    est = w.norm();
                    if est == 0.0 {
                        break;
                    }
                    u = w / est;
                }
                Ok(1.1 * est)
            }
        }
    }
}

/// The local model `ℓ(·; z_k)`.
#[derive(Debug, Clone)]
pub struct SurrogateModel<'a> {
    pub anchor: Vector,
    pub f_anchor: f64,
    pub grad_f: Vector,
    pub c: Vector,
    pub jacobian: Jacobian<'a>,
    pub gamma: f64,
    pub t: f64,
}

impl<'a> SurrogateModel<'a> {
    /// Build the model at `(x, y)`; needs the three Hessian-product oracles.
    pub fn build(problem: &'a ProblemSpec, x: &Vector, y: &Vector, gamma: f64, t: f64) -> Result<Self> {
        if !problem.has_jacobian() {
            return Err(Error::MissingOracle("g_hvp_yy / g_hvp_xy / g_hvp_yx"));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) || !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument("need gamma >= 0 and t > 0".into()));
        }
        let (dx, dy) = (problem.dx(), problem.dy());
        let jacobian = if dx + dy <= DENSE_LIMIT {
            let mut a = DMatrix::zeros(dy, dx + dy);
            for j in 0..dx {
                let mut e = Vector::zeros(dx);
                e[j] = 1.0;
                a.set_column(j, &problem.g_hvp_yx(x, y, &e)?);
            }
            for j in 0..dy {
                let mut e = Vector::zeros(dy);
                e[j] = 1.0;
                a.set_column(dx + j, &problem.g_hvp_yy(x, y, &e)?);
            }
            Jacobian::Dense(a)
        } else {
            Jacobian::Operator { problem, x: x.clone(), y: y.clone() }
        };
        Ok(SurrogateModel {
            anchor: concat(x, y),
            f_anchor: problem.f(x, y)?,
            grad_f: problem.f_grad(x, y)?,
            c: problem.g_grad_y(x, y)?,
            jacobian,
            gamma,
            t,
        })
    }

    /// `ℓ(z; z_k)`.
    pub fn eval(&self, z: &Vector) -> Result<f64> {
        check_dim(self.anchor.len(), z.len())?;
        let d = z - &self.anchor;
        let lin = &self.c + self.jacobian.apply(&d)?;
        Ok(self.f_anchor + self.grad_f.dot(&d) + self.gamma * lin.norm() + d.norm_squared() / (2.0 * self.t))
    }

    /// Primal point `z(u)` and dual value `φ(u)`.
    fn dual(&self, problem: &ProblemSpec, u: &Vector) -> Result<(Vector, f64)> {
        let shift = &self.grad_f + self.jacobian.adjoint(u)?;
        let z = project_z(problem, &(&self.anchor - &shift * self.t))?;
        let d = &z - &self.anchor;
        let value = self.f_anchor + u.dot(&self.c) + shift.dot(&d) + d.norm_squared() / (2.0 * self.t);
        Ok((z, value))
    }
}

/// `ℓ(z; z_k)` as a free function.
pub fn surrogate_eval(model: &SurrogateModel<'_>, z: &Vector) -> Result<f64> {
    model.eval(z)
}

#[derive(Debug, Clone)]
pub struct SubproblemSolution {
    pub z: Vector,
    /// Certified `ℓ(z) - φ(u) >= ℓ(z) - min ℓ`.
    pub gap: f64,
    pub primal: f64,
    pub dual: f64,
    pub dual_point: Vector,
    pub iters: usize,
}

fn project_ball(u: Vector, radius: f64) -> Vector {
    let n = u.norm();
    if n > radius {
        if radius == 0.0 {
            Vector::zeros(u.len())
        } else {
            u * (radius / n)
        }
    } else {
        u
    }
}

/// `δ`-approximate minimizer of `ℓ(·; z_k)` over `Z = C × U` by accelerated
/// projected ascent on the dual ball `‖u‖ <= γ`.
pub fn solve_subproblem(
    problem: &ProblemSpec,
    model: &SurrogateModel<'_>,
    delta: f64,
    max_iters: usize,
) -> Result<SubproblemSolution> {
    if !(delta > 0.0) {
        return Err(Error::InvalidArgument("subproblem tolerance must be > 0".into()));
    }
    check_dim(problem.dx() + problem.dy(), model.anchor.len())?;
    let dy = problem.dy();
    let norm_sq = model.jacobian.norm_sq_bound(dy)?;
    let step = if norm_sq > 0.0 { 1.0 / (model.t * norm_sq) } else { 0.0 };

    let mut best: Option<SubproblemSolution> = None;
    let mut consider = |u: &Vector, iters: usize| -> Result<f64> {
        let (z, dual) = model.dual(problem, u)?;
        let primal = model.eval(&z)?;
        let gap = (primal - dual).max(0.0);
        if best.as_ref().is_none_or(|b| gap < b.gap) {
            best = Some(SubproblemSolution { z, gap, primal, dual, dual_point: u.clone(), iters });
        }
        Ok(gap)
    };

    // Start from the subgradient-suggested direction of the penalty.
    let mut u = if model.c.norm() > 0.0 { &model.c * (model.gamma / model.c.norm()) } else { Vector::zeros(dy) };
    let mut v = u.clone();
    let mut theta = 1.0_f64;
    for it in 0..=max_iters {
        if consider(&u, it)? <= delta || step == 0.0 || model.gamma == 0.0 || it == max_iters {
            break;
        }
        // Ascent step at the extrapolated point v.
        let (zv, _) = model.dual(problem, &v)?;
        let grad = &model.c + model.jacobian.apply(&(&zv - &model.anchor))?;
        let next = project_ball(&v + grad * step, model.gamma);
        // Gradient-based restart when momentum points against the step.
        if (&next - &v).dot(&(&next - &u)) < 0.0 {
            theta = 1.0;
            v = next.clone();
        } else {
            let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
            v = &next + (&next - &u) * ((theta - 1.0) / theta_next);
            theta = theta_next;
        }
        u = next;
    }
    let sol = best.expect("at least one candidate is evaluated");
    if sol.gap > delta {
        return Err(Error::BudgetExceeded { gap: sol.gap, tolerance: delta });
    }
    Ok(sol)
}

/// Tolerance used for the stationarity mapping.
pub fn mapping_tolerance(model: &SurrogateModel<'_>) -> f64 {
    1e-12 * (1.0 + model.f_anchor.abs() + model.gamma * model.c.norm())
}

/// `𝒢_t(z_k) = (z_k - argmin ℓ(·; z_k)) / t`; returns `(‖𝒢_t‖², 𝒢_t)`.
pub fn prox_gradient_mapping(
    problem: &ProblemSpec,
    model: &SurrogateModel<'_>,
    max_iters: usize,
) -> Result<(f64, Vector)> {
    let sol = solve_subproblem(problem, model, mapping_tolerance(model), max_iters)?;
    let g = (&model.anchor - sol.z) / model.t;
    Ok((g.norm_squared(), g))
}

/// Exact-penalty value `f + γ‖∇_y g‖`.
pub fn exact_penalty_objective(problem: &ProblemSpec, gamma: f64, x: &Vector, y: &Vector) -> Result<f64> {
    Ok(problem.f(x, y)? + gamma * problem.g_grad_y(x, y)?.norm())
}

/// PBPL: `z_{k+1}` is a `δ_k`-approximate minimizer of `ℓ(·; z_k)` with
/// `δ_k = delta0/(k+1)^q`. Auto step `t = 1/(L_f + γ L_g2)`, or `t = 1`
/// when that denominator vanishes. Trace rows report `F̃_γ`, the
/// tightly-solved `‖𝒢_t(z_k)‖²` and the certified gap of the step.
pub fn pbpl(problem: &ProblemSpec, config: &SolverConfig) -> Result<SolveReport> {
    config.validate()?;
    if !problem.lower_unconstrained() {
        return Err(Error::InvalidConfig("pbpl needs an unconstrained lower level".into()));
    }
    if !problem.has_jacobian() {
        return Err(Error::InvalidConfig(
            "pbpl needs Jacobian products of the lower gradient (g_hvp_yy, g_hvp_xy, g_hvp_yx)".into(),
        ));
    }
    if !(config.delta_exponent > 1.0) || !(config.delta0 > 0.0) {
        return Err(Error::InvalidConfig("pbpl needs delta0 > 0 and a summable schedule (q > 1)".into()));
    }
    let gamma = config.gamma;
    let c = problem.constants();
    let mut notes = Vec::new();
    let t = match config.prox_step {
        Some(t) => t,
        None if config.auto_steps => {
            let l_f = crate::solvers::constant(c.l_f, "l_f")?;
            let l_g2 = crate::solvers::constant(c.l_g2, "l_g2")?;
            let denom = l_f + gamma * l_g2;
            for name in ["l_f", "l_g2"] {
                if c.is_estimated(name) {
                    notes.push(format!("auto prox step uses estimated constant {name}"));
                }
            }
            if denom > 0.0 {
                1.0 / denom
            } else {
                notes.push("L_f + γ L_g2 = 0, any t is admissible; using t = 1".into());
                1.0
            }
        }
        None => return Err(Error::InvalidConfig("prox_step is required when auto_steps is off".into())),
    };
    if let (Some(l_f), Some(l_g2)) = (c.l_f, c.l_g2) {
        if t > 1.0 / (l_f + gamma * l_g2) {
            notes.push("prox step exceeds 1/(L_f + γ L_g2); the descent guarantee does not apply".into());
        }
    }

    let clock = Clock::new(config.timing);
    let (mut x, mut y) = initial_point(problem, config)?;
    let mut trace = Vec::new();
    let mut termination = Termination::BudgetExhausted;
    for k in 1..=config.max_iters {
        let model = SurrogateModel::build(problem, &x, &y, gamma, t)?;
        let (g_sq, _) = prox_gradient_mapping(problem, &model, config.subproblem_max_iters)?;
        let step = solve_subproblem(problem, &model, config.subproblem_tolerance(k - 1), config.subproblem_max_iters)?;
        let f_value = model.f_anchor;
        let penalty = model.c.norm();
        trace.push(IterateRecord {
            k,
            f_value,
            penalty_value: penalty,
            f_gamma: f_value + gamma * penalty,
            proj_grad_norm_sq: g_sq,
            inner_iters: step.iters,
            elapsed_ns: clock.ns(),
            x: x.iter().copied().collect(),
            y: y.iter().copied().collect(),
            penalty_estimated: false,
            penalty_clamped: false,
            subproblem_gap: Some(step.gap),
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
        if diverged(&step.z) {
            termination = Termination::Diverged;
            break;
        }
        (x, y) = split(&step.z, problem.dx());
    }

    Ok(SolveReport {
        algorithm: "pbpl".into(),
        problem: problem.name().into(),
        x: x.iter().copied().collect(),
        y: y.iter().copied().collect(),
        trace,
        termination,
        config: config.clone(),
        steps: ResolvedSteps { alpha: None, beta: None, prox_step: Some(t) },
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems;

    fn v1(a: f64) -> Vector {
        Vector::from_element(1, a)
    }

    #[test]
    fn model_at_anchor_is_exact_penalty() {
        let p = problems::example_intro();
        let (x, y) = (v1(0.0), v1(0.7));
        let m = SurrogateModel::build(&p, &x, &y, 2.0, 0.05).unwrap();
        let want = exact_penalty_objective(&p, 2.0, &x, &y).unwrap();
        assert!((m.eval(&concat(&x, &y)).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn quadratic_model_is_exact_plus_prox() {
        let p = problems::quadratic();
        let m = SurrogateModel::build(&p, &v1(0.0), &v1(0.4), 1.5, 0.3).unwrap();
        for (zx, zy) in [(0.1, -0.7), (2.0, 0.4), (-1.0, 3.0)] {
            let z = Vector::from_vec(vec![zx, zy]);
            let want = exact_penalty_objective(&p, 1.5, &v1(zx), &v1(zy)).unwrap()
                + (&z - &m.anchor).norm_squared() / 0.6;
            assert!((m.eval(&z).unwrap() - want).abs() < 1e-13);
        }
    }

    #[test]
    fn soft_threshold_keeps_anchor() {
        let p = problems::quadratic();
        for gamma in [0.5, 1.0, 4.0] {
            let m = SurrogateModel::build(&p, &v1(0.0), &v1(0.0), gamma, 0.7).unwrap();
            let sol = solve_subproblem(&p, &m, 1e-12, 1000).unwrap();
            assert_eq!(sol.z[1], 0.0, "gamma={gamma}");
            let (g_sq, _) = prox_gradient_mapping(&p, &m, 1000).unwrap();
            assert_eq!(g_sq, 0.0);
        }
    }

    #[test]
    fn zero_gamma_is_projected_gradient_step() {
        let p = problems::toy_nc();
        let (x, y) = (v1(2.9), v1(0.3));
        let m = SurrogateModel::build(&p, &x, &y, 0.0, 0.05).unwrap();
        let sol = solve_subproblem(&p, &m, 1e-12, 10).unwrap();
        let want = project_z(&p, &(&m.anchor - &m.grad_f * 0.05)).unwrap();
        assert!((sol.z - want).norm() < 1e-15);
        let free = problems::quadratic();
        let m = SurrogateModel::build(&free, &v1(0.0), &v1(0.3), 0.0, 0.1).unwrap();
        let (_, g) = prox_gradient_mapping(&free, &m, 10).unwrap();
        assert!((g - free.f_grad(&v1(0.0), &v1(0.3)).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn certificate_matches_independent_evaluation() {
        let p = problems::example_intro();
        let m = SurrogateModel::build(&p, &v1(0.0), &v1(0.9), 2.0, 1.0 / 18.0).unwrap();
        let sol = solve_subproblem(&p, &m, 1e-9, 100_000).unwrap();
        assert!(sol.gap <= 1e-9);
        let primal = m.eval(&sol.z).unwrap();
        let (_, dual) = m.dual(&p, &sol.dual_point).unwrap();
        assert!(primal - dual <= 1e-9 + 1e-15);
        // Weak duality against a grid of feasible points.
        for i in -200..=200 {
            let z = Vector::from_vec(vec![0.0, 0.9 + i as f64 * 0.005]);
            assert!(m.eval(&z).unwrap() >= dual - 1e-12);
        }
    }

    #[test]
    fn budget_exceeded_reports_gap() {
        let p = problems::example_intro();
        let m = SurrogateModel::build(&p, &v1(0.0), &v1(0.05), 2.0, 1.0 / 18.0).unwrap();
        match solve_subproblem(&p, &m, 1e-300, 0) {
            Err(Error::BudgetExceeded { gap, tolerance }) => {
                assert!(gap > tolerance);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn pbpl_quadratic_is_exact() {
        let cfg = SolverConfig { gamma: 1.0, max_iters: 200, tol_proj_grad: Some(1e-10), ..SolverConfig::default() }
            .with_start(vec![0.0], vec![1.0]);
        let r = pbpl(&problems::quadratic(), &cfg).unwrap();
        assert!(r.y[0].abs() <= 1e-4, "{}", r.y[0]);
    }

    #[test]
    fn pbpl_intro_reaches_zero() {
        let cfg = SolverConfig { gamma: 2.0, max_iters: 2000, tol_proj_grad: Some(1e-9), ..SolverConfig::default() }
            .with_start(vec![0.0], vec![0.5]);
        let r = pbpl(&problems::example_intro(), &cfg).unwrap();
        assert!(r.y[0].abs() <= 1e-3, "{}", r.y[0]);
    }

    #[test]
    fn pbpl_needs_jacobian() {
        let p = ProblemSpec::builder("nohvp", 1, 1)
            .upper(|_, y| y[0], |_, _| Vector::from_vec(vec![0.0, 1.0]))
            .lower(|_, y| y[0] * y[0], |_, y| Vector::from_vec(vec![0.0, 2.0 * y[0]]))
            .build()
            .unwrap();
        assert!(matches!(pbpl(&p, &SolverConfig::default()), Err(Error::InvalidConfig(_))));
    }
}
