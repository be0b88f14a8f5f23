use rand::Rng;

use crate::constraint::ConstraintSet;
use crate::error::{Error, Result};
use crate::penalty::{penalty_value, PenaltyKind};
use crate::problem::ProblemSpec;
use crate::problems::CatalogEntry;
use crate::proxlinear::{exact_penalty_objective, SurrogateModel};
use crate::{concat, split, Vector};

use super::{uniform, CheckReport};

/// Residual tolerance of the Danskin check (finite differences with `h = 1e-5`).
pub const DANSKIN_TOLERANCE: f64 = 1e-4;

const REFERENCE_GRAD_TOL: f64 = 1e-11;
const REFERENCE_MAX_ITERS: usize = 200_000;

/// Uniform point in the entry's sampling box, projected onto `C × U`.
pub fn sample_point<R: Rng + ?Sized>(entry: &CatalogEntry, rng: &mut R) -> (Vector, Vector) {
    let p = &entry.problem;
    let x = Vector::from_fn(p.dx(), |_, _| uniform(rng, entry.sample_x));
    let y = Vector::from_fn(p.dy(), |_, _| uniform(rng, entry.sample_y));
    let x = p.upper_set().project(&x).unwrap_or(x);
    let y = p.lower_set().project(&y).unwrap_or(y);
    (x, y)
}

/// A lower-level solution at `x`: the analytic oracle if present, otherwise
/// (projected) gradient descent with `β = 1/L_g` until the projected
/// gradient is below `1e-11`.
pub fn reference_lower_solution(problem: &ProblemSpec, x: &Vector, y_start: &Vector) -> Result<Vector> {
    if problem.has_lower_solution() {
        return problem.lower_solution(x);
    }
    let l_g = problem.constants().l_g.ok_or(Error::MissingOracle("constants.l_g"))?;
    let beta = 1.0 / l_g;
    let set = problem.lower_set();
    let mut w = set.project(y_start)?;
    let mut residual = f64::INFINITY;
    for _ in 0..REFERENCE_MAX_ITERS {
        let next = set.project(&(&w - problem.g_grad_y(x, &w)? * beta))?;
        residual = (&next - &w).norm() / beta;
        w = next;
        if residual <= REFERENCE_GRAD_TOL {
            return Ok(w);
        }
    }
    Err(Error::BudgetExceeded { gap: residual, tolerance: REFERENCE_GRAD_TOL })
}

/// `v(x)` from the analytic oracle or from `g` at the reference solution.
fn lower_value_at(problem: &ProblemSpec, x: &Vector, y_star: &Vector) -> Result<f64> {
    match problem.lower_value(x) {
        Some(v) => Ok(v),
        None => problem.g(x, y_star),
    }
}

fn start_for(problem: &ProblemSpec) -> Vector {
    Vector::zeros(problem.dy())
}

/// Samples `(x, y)` and checks the three conditions of a `ρ`-squared-distance
/// bound: `p >= 0`, `ρ p(x,y) >= d²(y, S(x))`, and `p(x, y*) = 0`.
pub fn check_squared_distance_bound<R: Rng + ?Sized>(
    entry: &CatalogEntry,
    kind: PenaltyKind,
    rho: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<CheckReport> {
    if !(rho > 0.0) {
        return Err(Error::InvalidArgument("rho must be > 0".into()));
    }
    let p = &entry.problem;
    let mut residuals = Vec::with_capacity(3 * n_samples);
    for s in 0..n_samples {
        let (x, y) = sample_point(entry, rng);
        let y_star = reference_lower_solution(p, &x, &start_for(p))?;
        let v = lower_value_at(p, &x, &y_star)?;
        let pen = penalty_value(p, kind, &x, &y, Some(v))?;
        let d2 = (&y - &y_star).norm_squared();
        residuals.push(((-pen - 1e-12).max(0.0), format!("p < 0, sample {s}")));
        residuals.push(((d2 - rho * pen).max(0.0) / (1.0 + d2), format!("rho p < d^2, sample {s}")));
        let at_star = penalty_value(p, kind, &x, &y_star, Some(v))?;
        residuals.push(((at_star.abs() - 1e-12).max(0.0), format!("p(x, y*) != 0, sample {s}")));
    }
    Ok(CheckReport::from_residuals(format!("squared-distance-{kind}"), 1e-9, residuals))
}

/// Finite differences of `v` at `x` against `∇_x g(x, y*)`. Per coordinate
/// when `dx <= 8`, otherwise along one fixed direction.
pub fn check_danskin(problem: &ProblemSpec, x: &Vector, h: f64) -> Result<CheckReport> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument("finite-difference step must be > 0".into()));
    }
    let dx = problem.dx();
    let start = start_for(problem);
    let v_at = |x: &Vector| -> Result<f64> {
        let y = reference_lower_solution(problem, x, &start)?;
        lower_value_at(problem, x, &y)
    };
    let y_star = reference_lower_solution(problem, x, &start)?;
    let grad = problem.g_grad_x(x, &y_star)?;
    let directions: Vec<Vector> = if dx <= 8 {
        (0..dx)
            .map(|i| {
                let mut e = Vector::zeros(dx);
                e[i] = 1.0;
                e
            })
            .collect()
    } else {
        let d = Vector::from_fn(dx, |i, _| ((i + 1) as f64).sin());
        let n = d.norm();
        vec![d / n]
    };
    let mut residuals = Vec::with_capacity(directions.len());
    for (i, d) in directions.iter().enumerate() {
        let fd = (v_at(&(x + d * h))? - v_at(&(x - d * h))?) / (2.0 * h);
        let analytic = grad.dot(d);
        residuals.push(((fd - analytic).abs() / (1.0 + analytic.abs()), format!("direction {i}")));
    }
    Ok(CheckReport::from_residuals("danskin", DANSKIN_TOLERANCE, residuals))
}

/// At sampled `x`, the analytic lower solution is a fixed point of the
/// projected gradient step and attains `v(x)`.
pub fn check_lower_stationarity<R: Rng + ?Sized>(
    entry: &CatalogEntry,
    n_samples: usize,
    rng: &mut R,
) -> Result<CheckReport> {
    let p = &entry.problem;
    if !p.has_lower_solution() {
        return Ok(CheckReport::skipped("lower-stationarity", "no analytic lower-level solution"));
    }
    let mut residuals = Vec::with_capacity(2 * n_samples);
    for s in 0..n_samples {
        let (x, _) = sample_point(entry, rng);
        let y_star = p.lower_solution(&x)?;
        let grad = p.g_grad_y(&x, &y_star)?;
        let mapped = p.lower_set().project(&(&y_star - &grad))?;
        residuals.push(((&y_star - mapped).norm() / (1.0 + grad.norm()), format!("fixed point, sample {s}")));
        if let Some(v) = p.lower_value(&x) {
            let g = p.g(&x, &y_star)?;
            residuals.push(((g - v).abs() / (1.0 + v.abs()), format!("g(x, y*) = v(x), sample {s}")));
        }
    }
    Ok(CheckReport::from_residuals("lower-stationarity", 1e-10, residuals))
}

/// `g(x, ·)` is nonincreasing along (projected) gradient descent with `β = 1/L_g`.
pub fn check_descent<R: Rng + ?Sized>(
    entry: &CatalogEntry,
    n_samples: usize,
    iters: usize,
    rng: &mut R,
) -> Result<CheckReport> {
    let p = &entry.problem;
    let Some(l_g) = p.constants().l_g else {
        return Ok(CheckReport::skipped("inner-descent", "L_g not declared"));
    };
    let beta = 1.0 / l_g;
    let set = p.lower_set();
    let mut residuals = Vec::with_capacity(n_samples * iters);
    for s in 0..n_samples {
        let (x, mut w) = sample_point(entry, rng);
        let mut g = p.g(&x, &w)?;
        for t in 0..iters {
            w = set.project(&(&w - p.g_grad_y(&x, &w)? * beta))?;
            let next = p.g(&x, &w)?;
            residuals.push(((next - g).max(0.0) / (1.0 + g.abs()), format!("sample {s}, step {t}")));
            g = next;
        }
    }
    Ok(CheckReport::from_residuals("inner-descent", 1e-12, residuals))
}

/// Pointwise inner GD rate `d²(ω_{T+1}, S(x)) <= prefactor · c^T (g(x,ω_1) - v(x))`
/// with `c = 1 - β/(2μ)`, for `T = 1..t_max`.
pub fn check_inner_rate<R: Rng + ?Sized>(
    entry: &CatalogEntry,
    beta: f64,
    prefactor: f64,
    n_samples: usize,
    t_max: usize,
    rng: &mut R,
) -> Result<CheckReport> {
    let p = &entry.problem;
    if !p.lower_unconstrained() {
        return Err(Error::InvalidArgument("inner-rate check needs an unconstrained lower level".into()));
    }
    let mu = p.constants().mu.ok_or(Error::MissingOracle("constants.mu"))?;
    let c = 1.0 - beta / (2.0 * mu);
    if !(beta > 0.0) || !(0.0..1.0).contains(&c) {
        return Err(Error::InvalidArgument(format!("contraction factor {c} must lie in [0, 1)")));
    }
    let mut residuals = Vec::with_capacity(n_samples * t_max);
    for s in 0..n_samples {
        let (x, w1) = sample_point(entry, rng);
        let y_star = p.lower_solution(&x)?;
        let v = lower_value_at(p, &x, &y_star)?;
        let gap0 = p.g(&x, &w1)? - v;
        let mut w = w1;
        for t in 1..=t_max {
            w = &w - p.g_grad_y(&x, &w)? * beta;
            let d2 = (&w - &y_star).norm_squared();
            let bound = prefactor * c.powi(t as i32) * gap0;
            residuals.push(((d2 - bound).max(0.0), format!("sample {s}, T = {t}")));
        }
    }
    Ok(CheckReport::from_residuals("inner-rate", 1e-12, residuals))
}

/// Membership, idempotence, nonexpansiveness and the variational inequality
/// `⟨v - P(v), w - P(v)⟩ <= 0` for `w` in the set.
pub fn check_projection_properties<R: Rng + ?Sized>(
    set: &ConstraintSet,
    dim: usize,
    n_samples: usize,
    rng: &mut R,
) -> Result<CheckReport> {
    let tol = 1e-10;
    let draw = |rng: &mut R| Vector::from_fn(dim, |_, _| uniform(rng, (-4.0, 4.0)));
    let mut residuals = Vec::with_capacity(4 * n_samples);
    for s in 0..n_samples {
        let (a, b) = (draw(rng), draw(rng));
        let (pa, pb) = (set.project(&a)?, set.project(&b)?);
        let scale = 1.0 + a.norm();
        residuals.push((if set.contains(&pa, 1e-12) { 0.0 } else { f64::INFINITY }, format!("membership, sample {s}")));
        residuals.push(((set.project(&pa)? - &pa).norm() / scale, format!("idempotence, sample {s}")));
        residuals.push((((&pa - &pb).norm() - (&a - &b).norm()).max(0.0) / scale, format!("nonexpansive, sample {s}")));
        let w = set.project(&draw(rng))?;
        residuals.push(((&a - &pa).dot(&(&w - &pa)).max(0.0) / (scale * scale), format!("variational inequality, sample {s}")));
    }
    Ok(CheckReport::from_residuals("projection", tol, residuals))
}

/// Sandwich bound of the prox-linear model: with `L = L_f + γ L_g2`,
/// `|F̃_γ(z) - ℓ(z; z_k) + ‖z - z_k‖²/2t| <= (L/2)‖z - z_k‖²`, and
/// `ℓ >= F̃_γ` for `t = 1/L`. Pairs are half independent, half nearby.
pub fn check_surrogate_sandwich<R: Rng + ?Sized>(
    entry: &CatalogEntry,
    gamma: f64,
    n_samples: usize,
    rng: &mut R,
) -> Result<CheckReport> {
    let p = &entry.problem;
    let c = p.constants();
    let l_f = c.l_f.ok_or(Error::MissingOracle("constants.l_f"))?;
    let l_g2 = c.l_g2.ok_or(Error::MissingOracle("constants.l_g2"))?;
    let lip = l_f + gamma * l_g2;
    let t = if lip > 0.0 { 1.0 / lip } else { 1.0 };
    let dx = p.dx();
    let mut residuals = Vec::with_capacity(2 * n_samples);
    for s in 0..n_samples {
        let (xk, yk) = sample_point(entry, rng);
        let (x, y) = if s % 2 == 0 {
            sample_point(entry, rng)
        } else {
            let radius = 10f64.powf(uniform(rng, (-3.0, 0.0)));
            let dir = Vector::from_fn(dx + p.dy(), |_, _| uniform(rng, (-1.0, 1.0)));
            let norm = dir.norm().max(f64::MIN_POSITIVE);
            split(&(concat(&xk, &yk) + dir * (radius / norm)), dx)
        };
        let model = SurrogateModel::build(p, &xk, &yk, gamma, t)?;
        let z = concat(&x, &y);
        let d2 = (&z - &model.anchor).norm_squared();
        let exact = exact_penalty_objective(p, gamma, &x, &y)?;
        let ell = model.eval(&z)?;
        let scale = 1.0 + exact.abs();
        let gap = (exact - ell + d2 / (2.0 * t)).abs();
        residuals.push(((gap - 0.5 * lip * d2).max(0.0) / scale, format!("sandwich, sample {s}")));
        residuals.push(((exact - ell).max(0.0) / scale, format!("model above objective, sample {s}")));
    }
    Ok(CheckReport::from_residuals("surrogate-sandwich", 1e-9, residuals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems;
    use crate::verify::CheckStatus;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn v1(a: f64) -> Vector {
        Vector::from_element(1, a)
    }

    #[test]
    fn quadratic_value_gap_bound() {
        let e = problems::lookup("quadratic").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = check_squared_distance_bound(&e, PenaltyKind::ValueGap, 1.0, 100, &mut rng).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.worst_residual <= 1e-15);
        let r = check_squared_distance_bound(&e, PenaltyKind::GradNormSq, 1.0, 100, &mut rng).unwrap();
        assert!(r.passed());
        let r = check_squared_distance_bound(&e, PenaltyKind::ValueGap, 0.5, 100, &mut rng).unwrap();
        assert_eq!(r.status, CheckStatus::Fail);
    }

    #[test]
    fn danskin_on_constrained_toy() {
        let p = problems::constrained_toy();
        for x in [1.5, 0.5] {
            let r = check_danskin(&p, &v1(x), 1e-5).unwrap();
            assert!(r.passed() && r.worst_residual < 1e-8, "{x}: {r:?}");
        }
        // v(1.5) = 0.25 and the slope there is 1.
        let y = reference_lower_solution(&p, &v1(1.5), &v1(0.0)).unwrap();
        assert_eq!(p.g_grad_x(&v1(1.5), &y).unwrap()[0], 1.0);
    }

    #[test]
    fn reference_solution_without_oracle_is_stationary() {
        let params = problems::HypercleanParams { n_train: 20, n_val: 10, ..Default::default() };
        let p = problems::hyperclean_synthetic(&params).unwrap();
        let x = Vector::from_fn(20, |i, _| (i as f64).cos());
        let w = reference_lower_solution(&p, &x, &Vector::zeros(5)).unwrap();
        assert!(p.g_grad_y(&x, &w).unwrap().norm() <= 1e-10);
    }

    #[test]
    fn inner_rate_and_descent_hold_on_the_toy() {
        let e = problems::lookup("toy-nc").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let beta = 1.0 / e.problem.constants().l_g.unwrap();
        assert!(check_inner_rate(&e, beta, 1.0, 20, 50, &mut rng).unwrap().passed());
        assert!(check_descent(&e, 20, 20, &mut rng).unwrap().passed());
    }

    #[test]
    fn inner_rate_detects_an_impossible_prefactor() {
        let e = problems::lookup("example-intro").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = check_inner_rate(&e, 1.0 / 6.0, 1e-6, 20, 5, &mut rng).unwrap();
        assert_eq!(r.status, CheckStatus::Fail);
    }

    #[test]
    fn projections_of_every_kind() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ball = ConstraintSet::ball(vec![1.0, 0.0], 0.5).unwrap();
        assert!(check_projection_properties(&ball, 2, 50, &mut rng).unwrap().passed());
        let simplex = ConstraintSet::simplex(2.0).unwrap();
        assert!(check_projection_properties(&simplex, 3, 50, &mut rng).unwrap().passed());
    }

    #[test]
    fn sandwich_on_intro_and_toy() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for name in ["example-intro", "toy-nc", "quadratic"] {
            let e = problems::lookup(name).unwrap();
            let r = check_surrogate_sandwich(&e, 2.0, 200, &mut rng).unwrap();
            assert!(r.passed(), "{name}: {r:?}");
        }
    }

    #[test]
    fn sandwich_fails_with_understated_curvature() {
        let e = problems::lookup("example-intro").unwrap();
        let mut c = e.problem.constants().clone();
        c.l_g2 = Some(0.5);
        c.l_f = Some(0.1);
        let e = problems::CatalogEntry { problem: e.problem.clone().with_constants(c).unwrap(), ..e };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert_eq!(check_surrogate_sandwich(&e, 2.0, 200, &mut rng).unwrap().status, CheckStatus::Fail);
    }
}
