//! Penalty functions, the penalized objective `F_γ = f + γp`, its gradients,
//! and the projected-gradient stationarity metric.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::problem::ProblemSpec;
use crate::{concat, split, Vector};

/// Smallest value-gap penalty accepted as roundoff from an inexact `v̂`.
pub const VALUE_GAP_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PenaltyKind {
    /// `g(x,y) - v(x)`.
    ValueGap,
    /// `‖∇_y g(x,y)‖²`.
    GradNormSq,
    /// `‖∇_y g(x,y)‖`; nonsmooth, prox-linear pathway only.
    GradNorm,
}

impl fmt::Display for PenaltyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PenaltyKind::ValueGap => "value-gap",
            PenaltyKind::GradNormSq => "grad-norm-sq",
            PenaltyKind::GradNorm => "grad-norm",
        })
    }
}

impl FromStr for PenaltyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "value-gap" | "value_gap" => Ok(PenaltyKind::ValueGap),
            "grad-norm-sq" | "grad_norm_sq" => Ok(PenaltyKind::GradNormSq),
            "grad-norm" | "grad_norm" => Ok(PenaltyKind::GradNorm),
            other => Err(Error::InvalidArgument(format!("unknown penalty kind `{other}`"))),
        }
    }
}

fn require_unconstrained_lower(problem: &ProblemSpec, kind: PenaltyKind) -> Result<()> {
    if !problem.lower_unconstrained() {
        return Err(Error::InvalidArgument(format!(
            "{kind} penalty requires an unconstrained lower level"
        )));
    }
    Ok(())
}

pub fn penalty_value(
    problem: &ProblemSpec,
    kind: PenaltyKind,
    x: &Vector,
    y: &Vector,
    v_hat: Option<f64>,
) -> Result<f64> {
    match kind {
        PenaltyKind::ValueGap => {
            let v = v_hat
                .or_else(|| problem.lower_value(x))
                .ok_or(Error::MissingOracle("analytic_v (or a supplied v_hat)"))?;
            Ok(problem.g(x, y)? - v)
        }
        PenaltyKind::GradNormSq => {
            require_unconstrained_lower(problem, kind)?;
            Ok(problem.g_grad_y(x, y)?.norm_squared())
        }
        PenaltyKind::GradNorm => {
            require_unconstrained_lower(problem, kind)?;
            Ok(problem.g_grad_y(x, y)?.norm())
        }
    }
}

/// `F_γ(x, y) = f(x, y) + γ p(x, y)`. `γ = 0` is accepted here.
pub fn penalized_objective(
    problem: &ProblemSpec,
    kind: PenaltyKind,
    gamma: f64,
    x: &Vector,
    y: &Vector,
    v_hat: Option<f64>,
) -> Result<f64> {
    if !(gamma >= 0.0) {
        return Err(Error::InvalidArgument("gamma must be >= 0".into()));
    }
    let f = problem.f(x, y)?;
    if gamma == 0.0 {
        return Ok(f);
    }
    Ok(f + gamma * penalty_value(problem, kind, x, y, v_hat)?)
}

/// `∇f(x,y) + γ(∇g(x,y) - (∇_x g(x,ŷ), 0))`, the value-gap gradient with
/// `∇v(x)` replaced by `∇_x g(x, ŷ)` at an approximate lower solution `ŷ`.
pub fn penalized_gradient_value_gap(
    problem: &ProblemSpec,
    gamma: f64,
    x: &Vector,
    y: &Vector,
    y_hat: &Vector,
) -> Result<Vector> {
    check_dim(problem.dy(), y_hat.len())?;
    let mut grad = problem.f_grad(x, y)? + problem.g_grad(x, y)? * gamma;
    let gx_hat = problem.g_grad_x(x, y_hat)?;
    grad.rows_mut(0, problem.dx()).axpy(-gamma, &gx_hat, 1.0);
    Ok(grad)
}

/// `∇f + 2γ(∇_xy g·∇_y g, ∇_yy g·∇_y g)`.
pub fn penalized_gradient_grad_norm_sq(
    problem: &ProblemSpec,
    gamma: f64,
    x: &Vector,
    y: &Vector,
) -> Result<Vector> {
    require_unconstrained_lower(problem, PenaltyKind::GradNormSq)?;
    let gy = problem.g_grad_y(x, y)?;
    let px = problem.g_hvp_xy(x, y, &gy)?;
    let py = problem.g_hvp_yy(x, y, &gy)?;
    Ok(problem.f_grad(x, y)? + concat(&px, &py) * (2.0 * gamma))
}

/// Which lower-level point backs `∇v(x)` in a value-gap gradient.
#[derive(Debug, Clone, Copy)]
pub enum LowerEstimate<'a> {
    /// Use the problem's analytic lower-level solution.
    Exact,
    /// Use an inner-solver estimate `ŷ`.
    Approx(&'a Vector),
}

/// Gradient of `F_γ` for the smooth penalties. Returns the gradient and
/// whether it used an exact lower-level solution (always true for
/// `GradNormSq`).
pub fn penalized_gradient(
    problem: &ProblemSpec,
    kind: PenaltyKind,
    gamma: f64,
    x: &Vector,
    y: &Vector,
    lower: LowerEstimate<'_>,
) -> Result<(Vector, bool)> {
    match kind {
        PenaltyKind::ValueGap => match lower {
            LowerEstimate::Exact => {
                let y_star = problem.lower_solution(x)?;
                Ok((penalized_gradient_value_gap(problem, gamma, x, y, &y_star)?, true))
            }
            LowerEstimate::Approx(y_hat) => {
                Ok((penalized_gradient_value_gap(problem, gamma, x, y, y_hat)?, false))
            }
        },
        PenaltyKind::GradNormSq => Ok((penalized_gradient_grad_norm_sq(problem, gamma, x, y)?, true)),
        PenaltyKind::GradNorm => Err(Error::InvalidArgument(
            "grad-norm penalty is nonsmooth; use the prox-gradient mapping".into(),
        )),
    }
}

/// Projection onto `Z = C × U`.
pub fn project_z(problem: &ProblemSpec, z: &Vector) -> Result<Vector> {
    check_dim(problem.dx() + problem.dy(), z.len())?;
    let (x, y) = split(z, problem.dx());
    Ok(concat(&problem.upper_set().project(&x)?, &problem.lower_set().project(&y)?))
}

#[derive(Debug, Clone)]
pub struct ProjectedGradient {
    pub norm_sq: f64,
    pub vector: Vector,
    /// The gradient used an exact lower-level solution.
    pub exact_lower: bool,
}

/// `G_γ = ((x,y) - Proj_Z((x,y) - α∇F_γ(x,y))) / α` from a precomputed gradient.
pub fn projected_gradient_from(
    problem: &ProblemSpec,
    alpha: f64,
    x: &Vector,
    y: &Vector,
    grad: &Vector,
) -> Result<Vector> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument("alpha must be > 0".into()));
    }
    let z = concat(x, y);
    let stepped = project_z(problem, &(&z - grad * alpha))?;
    Ok((z - stepped) / alpha)
}

pub fn projected_gradient_metric(
    problem: &ProblemSpec,
    kind: PenaltyKind,
    gamma: f64,
    alpha: f64,
    x: &Vector,
    y: &Vector,
    lower: LowerEstimate<'_>,
) -> Result<ProjectedGradient> {
    let (grad, exact_lower) = penalized_gradient(problem, kind, gamma, x, y, lower)?;
    let vector = projected_gradient_from(problem, alpha, x, y, &grad)?;
    Ok(ProjectedGradient { norm_sq: vector.norm_squared(), vector, exact_lower })
}

/// Value-gap penalty as reported in traces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueGapReading {
    pub value: f64,
    /// `v(x)` came from `g(x, ŷ)` rather than an analytic oracle.
    pub estimated: bool,
    /// A roundoff-level negative value was clamped to zero.
    pub clamped: bool,
    /// The raw value fell below `-VALUE_GAP_SLACK`.
    pub violated: bool,
}

pub fn value_gap_reading(
    problem: &ProblemSpec,
    x: &Vector,
    y: &Vector,
    y_hat: Option<&Vector>,
) -> Result<ValueGapReading> {
    let (v, estimated) = match (problem.lower_value(x), y_hat) {
        (Some(v), _) => (v, false),
        (None, Some(y_hat)) => (problem.g(x, y_hat)?, true),
        (None, None) => return Err(Error::MissingOracle("analytic_v or inner estimate")),
    };
    let raw = problem.g(x, y)? - v;
    Ok(if raw >= 0.0 {
        ValueGapReading { value: raw, estimated, clamped: false, violated: false }
    } else if raw >= -VALUE_GAP_SLACK {
        ValueGapReading { value: 0.0, estimated, clamped: true, violated: false }
    } else {
        ValueGapReading { value: raw, estimated, clamped: false, violated: true }
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
    fn quadratic_penalty_values() {
        let p = problems::quadratic();
        let (x, y) = (v1(0.0), v1(0.3));
        let vg = penalty_value(&p, PenaltyKind::ValueGap, &x, &y, None).unwrap();
        assert!((vg - 0.09).abs() < 1e-15);
        let gn = penalty_value(&p, PenaltyKind::GradNormSq, &x, &y, None).unwrap();
        assert!((gn - 0.36).abs() < 1e-15);
        let y0 = v1(0.0);
        for kind in [PenaltyKind::ValueGap, PenaltyKind::GradNormSq, PenaltyKind::GradNorm] {
            assert_eq!(penalty_value(&p, kind, &x, &y0, None).unwrap(), 0.0);
        }
    }

    #[test]
    fn value_gap_without_any_v_is_missing_oracle() {
        let p = problems::hyperclean_synthetic(&problems::HypercleanParams::default()).unwrap();
        let x = Vector::zeros(p.dx());
        let y = Vector::zeros(p.dy());
        assert!(matches!(
            penalty_value(&p, PenaltyKind::ValueGap, &x, &y, None),
            Err(Error::MissingOracle(_))
        ));
        assert!(penalty_value(&p, PenaltyKind::ValueGap, &x, &y, Some(0.1)).is_ok());
    }

    #[test]
    fn quadratic_penalized_objective() {
        let p = problems::quadratic();
        let x = v1(0.0);
        let f = penalized_objective(&p, PenaltyKind::ValueGap, 10.0, &x, &v1(0.3), None).unwrap();
        assert!((f - 1.2).abs() < 1e-14);
        let f = penalized_objective(&p, PenaltyKind::ValueGap, 10.0, &x, &v1(-0.05), None).unwrap();
        assert!((f + 0.025).abs() < 1e-15);
        // The closed-form minimizer of y + 10 y² beats its neighbours.
        for dy in [-1e-3, 1e-3] {
            let g = penalized_objective(&p, PenaltyKind::ValueGap, 10.0, &x, &v1(-0.05 + dy), None)
                .unwrap();
            assert!(g > f);
        }
        let f0 = penalized_objective(&p, PenaltyKind::ValueGap, 0.0, &x, &v1(0.3), None).unwrap();
        assert_eq!(f0, 0.3);
    }

    #[test]
    fn value_gap_gradient_for_shifted_quadratic() {
        // g = (y - x)², f = 0, exact ŷ = x.
        let p = crate::ProblemSpec::builder("shift", 1, 1)
            .upper(|_, _| 0.0, |_, _| Vector::zeros(2))
            .lower(
                |x, y| (y[0] - x[0]).powi(2),
                |x, y| Vector::from_vec(vec![-2.0 * (y[0] - x[0]), 2.0 * (y[0] - x[0])]),
            )
            .build()
            .unwrap();
        let (x, y) = (v1(0.0), v1(1.0));
        let grad = penalized_gradient_value_gap(&p, 1.0, &x, &y, &x).unwrap();
        assert_eq!(grad, Vector::from_vec(vec![-2.0, 2.0]));
    }

    #[test]
    fn value_gap_gradient_at_lower_solution_reduces_to_f_gradient() {
        let p = problems::toy_nc();
        let x = v1(1.3);
        let y = p.lower_solution(&x).unwrap();
        let grad = penalized_gradient_value_gap(&p, 7.0, &x, &y, &y).unwrap();
        let fg = p.f_grad(&x, &y).unwrap();
        assert!((grad - fg).norm() < 1e-12);
    }

    #[test]
    fn grad_norm_sq_gradient_on_quadratic() {
        let p = problems::quadratic();
        let grad = penalized_gradient_grad_norm_sq(&p, 1.0, &v1(0.0), &v1(0.3)).unwrap();
        assert!((grad[0]).abs() < 1e-15);
        assert!((grad[1] - 3.4).abs() < 1e-14);
    }

    #[test]
    fn grad_norm_sq_gradient_vanishes_at_intro_trap() {
        let p = problems::example_intro();
        let y = v1(2.0 * std::f64::consts::PI / 3.0);
        for gamma in [1.0, 10.0, 100.0] {
            let grad = penalized_gradient_grad_norm_sq(&p, gamma, &v1(0.0), &y).unwrap();
            assert!(grad.norm() < 1e-12 * (1.0 + gamma), "gamma={gamma}: {grad}");
        }
    }

    #[test]
    fn grad_norm_sq_requires_hvp() {
        let p = crate::ProblemSpec::builder("nohvp", 1, 1)
            .upper(|_, y| y[0], |_, _| Vector::from_vec(vec![0.0, 1.0]))
            .lower(|_, y| y[0] * y[0], |_, y| Vector::from_vec(vec![0.0, 2.0 * y[0]]))
            .build()
            .unwrap();
        assert!(matches!(
            penalized_gradient_grad_norm_sq(&p, 1.0, &v1(0.0), &v1(1.0)),
            Err(Error::MissingOracle(_))
        ));
    }

    #[test]
    fn projected_gradient_zero_at_penalized_minimizer() {
        let p = problems::quadratic();
        let pg = projected_gradient_metric(
            &p,
            PenaltyKind::ValueGap,
            10.0,
            0.02,
            &v1(0.0),
            &v1(-0.05),
            LowerEstimate::Exact,
        )
        .unwrap();
        assert!(pg.norm_sq < 1e-28);
        assert!(pg.exact_lower);
    }

    #[test]
    fn projected_gradient_is_gradient_in_interior() {
        let p = problems::quadratic();
        let (x, y) = (v1(0.0), v1(0.3));
        let pg = projected_gradient_metric(
            &p,
            PenaltyKind::ValueGap,
            10.0,
            0.02,
            &x,
            &y,
            LowerEstimate::Exact,
        )
        .unwrap();
        let (grad, _) =
            penalized_gradient(&p, PenaltyKind::ValueGap, 10.0, &x, &y, LowerEstimate::Exact).unwrap();
        assert!((pg.vector - grad).norm() < 1e-12);
    }

    #[test]
    fn projected_gradient_drops_outward_normal_on_box_face() {
        // Constrained toy at (x, y) = (2, 1), y on the upper face of U = [0, 1].
        // ∂F/∂y = 2(y-1) + 2γ(y-x) = -40 pushes y outward; with the exact
        // ŷ = 1 the x-block is 2(x-1) = 2 and points inward.
        let p = problems::constrained_toy();
        let (x, y) = (v1(2.0), v1(1.0));
        let pg = projected_gradient_metric(
            &p,
            PenaltyKind::ValueGap,
            20.0,
            0.01,
            &x,
            &y,
            LowerEstimate::Exact,
        )
        .unwrap();
        assert_eq!(pg.vector[1], 0.0);
        assert!((pg.vector[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn value_gap_reading_clamps_roundoff() {
        let p = problems::hyperclean_synthetic(&problems::HypercleanParams::default()).unwrap();
        let x = Vector::zeros(p.dx());
        let y = Vector::zeros(p.dy());
        let r = value_gap_reading(&p, &x, &y, Some(&y)).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.estimated && !r.violated);
    }
}
