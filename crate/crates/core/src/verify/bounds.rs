use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::inner::{inner_iteration_schedule, ScheduleMode};
use crate::penalty::{projected_gradient_metric, LowerEstimate, PenaltyKind};
use crate::problem::ProblemSpec;
use crate::report::{IterateRecord, SolveReport};
use crate::solvers::constant;
use crate::Vector;

use super::CheckReport;

/// Least-squares slope of `log b` against `log a`.
pub fn fit_loglog_slope(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.len() < 3 {
        return Err(Error::InvalidArgument(format!("slope fit needs >= 3 pairs, got {}", pairs.len())));
    }
    if let Some(bad) = pairs.iter().find(|(a, b)| !(*a > 0.0 && *b > 0.0 && a.is_finite() && b.is_finite())) {
        return Err(Error::InvalidArgument(format!("slope fit needs positive values, got {bad:?}")));
    }
    let n = pairs.len() as f64;
    let (lx, ly): (Vec<f64>, Vec<f64>) = pairs.iter().map(|(a, b)| (a.ln(), b.ln())).unzip();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("slope fit needs distinct abscissae".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundKind {
    /// Running mean of `‖G_γ‖²` for V-PBGD.
    ValueGap,
    /// Running mean of `‖G_γ‖²` for V-PBGD with a constrained lower level.
    ConstrainedValueGap,
    /// Running minimum of `‖𝒢_t‖²` for PBPL.
    ProxLinear,
}

impl BoundKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundKind::ValueGap => "value-gap",
            BoundKind::ConstrainedValueGap => "constrained-value-gap",
            BoundKind::ProxLinear => "prox-linear",
        }
    }
}

/// Inner iteration counts the bound assumes.
#[derive(Debug, Clone, Copy, PartialEq)]
struct InnerRequirement {
    alpha: f64,
    beta: f64,
    gamma: f64,
    mu: f64,
    l_g: f64,
    mode: ScheduleMode,
}

impl InnerRequirement {
    fn iters(&self, k: usize) -> Option<usize> {
        let c = 1.0 - self.beta / (2.0 * self.mu);
        if c <= 0.0 {
            return None;
        }
        inner_iteration_schedule(k, self.alpha, self.beta, self.gamma, self.mu, self.l_g, self.mode).ok()
    }
}

/// Right-hand side of a convergence-rate bound, fixed for one run.
///
/// Value gap: `18(F_γ(z_1) - C_f)/(αK) + 10 L² L_g²/K`.
/// Constrained value gap: `8(F_γ(z_1) - C_f)/(αK) + 3 L_g² μ C_g/K`.
/// Prox-linear: `(2/t)(F̃_γ(z_0) - C_f + Σ_{k<K} δ_k)/K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bound {
    pub kind: BoundKind,
    /// `C_f`, a lower bound of the penalized objective.
    pub floor: f64,
    /// `α`, or `t` for the prox-linear bound.
    pub step: f64,
    /// Additive constant over `K`; 0 for the prox-linear bound.
    pub constant_term: f64,
    /// `δ_k = delta0/(k+1)^q` (prox-linear only).
    pub delta: Option<(f64, f64)>,
    /// Violated preconditions; a nonempty list makes the check `Skipped`.
    pub violations: Vec<String>,
    /// Remarks carried into the report, e.g. estimated constants.
    pub notes: Vec<String>,
    inner: Option<InnerRequirement>,
}

fn step_of(value: Option<f64>, name: &str) -> Result<f64> {
    value.ok_or_else(|| Error::InvalidArgument(format!("report has no resolved {name}")))
}

fn exceeds(step: f64, limit: f64) -> bool {
    step > limit * (1.0 + 1e-12)
}

impl Bound {
    /// Running-mean bound for a V-PBGD report; `floor` is `C_f`.
    pub fn value_gap(problem: &ProblemSpec, report: &SolveReport, floor: f64) -> Result<Bound> {
        let c = problem.constants();
        let (l, l_f) = (constant(c.upper_lipschitz, "upper_lipschitz")?, constant(c.l_f, "l_f")?);
        let (l_g, mu) = (constant(c.l_g, "l_g")?, constant(c.mu, "mu")?);
        let gamma = report.config.gamma;
        let alpha = step_of(report.steps.alpha, "alpha")?;
        let beta = step_of(report.steps.beta, "beta")?;
        let limit = 1.0 / (l_f + gamma * (2.0 * l_g + l_g * l_g * mu));
        let mut violations = Vec::new();
        if exceeds(alpha, limit) {
            violations.push(format!("alpha = {alpha:.4e} exceeds 1/(L_f + gamma(2L_g + L_g^2 mu)) = {limit:.4e}"));
        }
        if exceeds(beta, 1.0 / l_g) {
            violations.push(format!("beta = {beta:.4e} exceeds 1/L_g"));
        }
        Ok(Bound {
            kind: BoundKind::ValueGap,
            floor,
            step: alpha,
            constant_term: 10.0 * l * l * l_g * l_g,
            delta: None,
            violations,
            notes: estimated(problem, &["upper_lipschitz", "l_f", "l_g", "mu"]),
            inner: Some(InnerRequirement { alpha, beta, gamma, mu, l_g, mode: ScheduleMode::Unconstrained }),
        })
    }

    /// Running-mean bound for a constrained V-PBGD report with supplied or
    /// estimated `C_g = max (g - v)` over `C × U`.
    pub fn constrained_value_gap(problem: &ProblemSpec, report: &SolveReport, floor: f64, c_g: f64) -> Result<Bound> {
        if !(c_g >= 0.0) {
            return Err(Error::InvalidArgument("C_g must be >= 0".into()));
        }
        let c = problem.constants();
        let (l_f, l_g) = (constant(c.l_f, "l_f")?, constant(c.l_g, "l_g")?);
        let (l_v, mu) = (constant(c.l_v, "l_v")?, constant(c.mu, "mu")?);
        let gamma = report.config.gamma;
        let alpha = step_of(report.steps.alpha, "alpha")?;
        let beta = step_of(report.steps.beta, "beta")?;
        let limit = 1.0 / (l_f + gamma * (l_g + l_v));
        let mut violations = Vec::new();
        if exceeds(alpha, limit) {
            violations.push(format!("alpha = {alpha:.4e} exceeds 1/(L_f + gamma(L_g + L_v)) = {limit:.4e}"));
        }
        if exceeds(beta, 1.0 / l_g) {
            violations.push(format!("beta = {beta:.4e} exceeds 1/L_g"));
        }
        Ok(Bound {
            kind: BoundKind::ConstrainedValueGap,
            floor,
            step: alpha,
            constant_term: 3.0 * l_g * l_g * mu * c_g,
            delta: None,
            violations,
            notes: estimated(problem, &["l_f", "l_g", "l_v", "mu"]),
            inner: Some(InnerRequirement { alpha, beta, gamma, mu, l_g, mode: ScheduleMode::Constrained }),
        })
    }

    /// Running-minimum bound for a PBPL report.
    pub fn prox_linear(problem: &ProblemSpec, report: &SolveReport, floor: f64) -> Result<Bound> {
        let c = problem.constants();
        let (l_f, l_g2) = (constant(c.l_f, "l_f")?, constant(c.l_g2, "l_g2")?);
        let t = step_of(report.steps.prox_step, "prox step")?;
        let lip = l_f + report.config.gamma * l_g2;
        let mut violations = Vec::new();
        if lip > 0.0 && exceeds(t, 1.0 / lip) {
            violations.push(format!("t = {t:.4e} exceeds 1/(L_f + gamma L_g2) = {:.4e}", 1.0 / lip));
        }
        Ok(Bound {
            kind: BoundKind::ProxLinear,
            floor,
            step: t,
            constant_term: 0.0,
            delta: Some((report.config.delta0, report.config.delta_exponent)),
            violations,
            notes: estimated(problem, &["l_f", "l_g2"]),
            inner: None,
        })
    }

    /// Right-hand side at prefix length `k` given the initial objective.
    pub fn rhs(&self, k: usize, initial: f64) -> f64 {
        let kf = k as f64;
        match self.kind {
            BoundKind::ValueGap => 18.0 * (initial - self.floor) / (self.step * kf) + self.constant_term / kf,
            BoundKind::ConstrainedValueGap => 8.0 * (initial - self.floor) / (self.step * kf) + self.constant_term / kf,
            BoundKind::ProxLinear => {
                let (d0, q) = self.delta.unwrap_or((0.0, 2.0));
                let deltas: f64 = (0..k).map(|j| d0 / ((j + 1) as f64).powf(q)).sum();
                2.0 / self.step * (initial - self.floor + deltas) / kf
            }
        }
    }
}

fn estimated(problem: &ProblemSpec, names: &[&str]) -> Vec<String> {
    let used: Vec<&str> = names.iter().copied().filter(|n| problem.constants().is_estimated(n)).collect();
    if used.is_empty() {
        Vec::new()
    } else {
        vec![format!("bound uses estimated constants: {}", used.join(", "))]
    }
}

/// Checks the bound at every prefix `K` of the trace. The value-gap bounds
/// compare the running mean of the metric, the prox-linear bound its running minimum.
pub fn convergence_bound_check(trace: &[IterateRecord], bound: &Bound) -> Result<CheckReport> {
    let name = format!("bound-{}", bound.kind.as_str());
    let first = trace.first().ok_or_else(|| Error::InvalidArgument("empty trace".into()))?;
    if !bound.violations.is_empty() {
        return Ok(CheckReport::skipped(name, format!("precondition violated: {}", bound.violations.join("; "))));
    }
    if let Some(req) = bound.inner {
        if let Some(row) = trace.iter().find(|r| req.iters(r.k).is_some_and(|t| r.inner_iters < t)) {
            return Ok(CheckReport::skipped(
                name,
                format!("precondition violated: {} inner iterations at k = {} are below the schedule", row.inner_iters, row.k),
            ));
        }
    }
    let initial = first.f_gamma;
    let mut sum = 0.0;
    let mut min = f64::INFINITY;
    let mut residuals = Vec::with_capacity(trace.len());
    for (i, row) in trace.iter().enumerate() {
        let k = i + 1;
        sum += row.proj_grad_norm_sq;
        min = min.min(row.proj_grad_norm_sq);
        let lhs = match bound.kind {
            BoundKind::ValueGap | BoundKind::ConstrainedValueGap => sum / k as f64,
            BoundKind::ProxLinear => min,
        };
        let rhs = bound.rhs(k, initial);
        let r = if lhs.is_nan() || rhs.is_nan() { f64::NAN } else { (lhs - rhs).max(0.0) / (1.0 + rhs.abs()) };
        residuals.push((r, format!("K = {k}: lhs {lhs:.6e} > rhs {rhs:.6e}")));
    }
    let mut report = CheckReport::from_residuals(name, 1e-12, residuals);
    report.details.extend(bound.notes.iter().cloned());
    Ok(report)
}

/// Re-evaluates every row's `‖G_γ‖²` of a value-gap report with the
/// analytic lower-level solution in place of the inner estimate.
pub fn with_exact_metric(problem: &ProblemSpec, report: &SolveReport) -> Result<SolveReport> {
    let alpha = step_of(report.steps.alpha, "alpha")?;
    let mut out = report.clone();
    for row in &mut out.trace {
        let x = Vector::from_vec(row.x.clone());
        let y = Vector::from_vec(row.y.clone());
        let g = projected_gradient_metric(
            problem,
            PenaltyKind::ValueGap,
            report.config.gamma,
            alpha,
            &x,
            &y,
            LowerEstimate::Exact,
        )?;
        row.proj_grad_norm_sq = g.norm_sq;
    }
    Ok(out)
}

/// Grid estimate of `C_g = max (g - v)` over `C × U` for problems with
/// `dx = dy = 1` and bounded sets: `n × n` grid including the endpoints.
pub fn estimate_c_g(problem: &ProblemSpec, n: usize) -> Result<f64> {
    if problem.dx() != 1 || problem.dy() != 1 {
        return Err(Error::InvalidArgument("C_g grid estimate needs dx = dy = 1".into()));
    }
    if n < 2 {
        return Err(Error::InvalidArgument("grid needs >= 2 points per axis".into()));
    }
    let bounds = |set: &crate::ConstraintSet, what: &str| {
        set.coordinate_bounds(1)
            .map(|b| b[0])
            .filter(|(lo, hi)| lo.is_finite() && hi.is_finite())
            .ok_or_else(|| Error::InvalidArgument(format!("{what} must be bounded for the C_g estimate")))
    };
    let (xl, xh) = bounds(problem.upper_set(), "C")?;
    let (yl, yh) = bounds(problem.lower_set(), "U")?;
    let at = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (n - 1) as f64;
    let mut best = f64::NEG_INFINITY;
    for i in 0..n {
        let x = Vector::from_element(1, at(xl, xh, i));
        let v = match problem.lower_value(&x) {
            Some(v) => v,
            None => problem.g(&x, &super::reference_lower_solution(problem, &x, &Vector::zeros(1))?)?,
        };
        for j in 0..n {
            let y = Vector::from_element(1, at(yl, yh, j));
            best = best.max(problem.g(&x, &y)? - v);
        }
    }
    Ok(best.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SolverConfig;
    use crate::problems;
    use crate::solvers::{v_pbgd, v_pbgd_constrained};
    use crate::verify::CheckStatus;

    #[test]
    fn exact_power_laws() {
        let s = fit_loglog_slope(&[(1.0, 1.0), (10.0, 1e-2), (100.0, 1e-4)]).unwrap();
        assert!((s + 2.0).abs() < 1e-12);
        let s = fit_loglog_slope(&[(1.0, 2.0), (10.0, 20.0), (100.0, 200.0)]).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
        assert!(fit_loglog_slope(&[(1.0, 1.0)]).is_err());
        assert!(fit_loglog_slope(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
    }

    #[test]
    fn constrained_toy_grid_max() {
        // g - v on [0,2] x [0,1] peaks at (2, 0): 4 - 1 = 3.
        let c = estimate_c_g(&problems::constrained_toy(), 64).unwrap();
        assert!((c - 3.0).abs() < 1e-12);
        assert!(estimate_c_g(&problems::quadratic(), 64).is_err());
    }

    fn quad_report(alpha: Option<f64>) -> SolveReport {
        let cfg = SolverConfig { gamma: 10.0, alpha, max_iters: 100, tol_proj_grad: None, ..SolverConfig::default() }
            .with_start(vec![0.0], vec![1.0]);
        v_pbgd(&problems::quadratic(), &cfg).unwrap()
    }

    #[test]
    fn value_gap_bound_on_quadratic() {
        let p = problems::quadratic();
        let r = quad_report(None);
        let b = Bound::value_gap(&p, &r, -1.0 / 40.0).unwrap();
        let check = convergence_bound_check(&r.trace, &b).unwrap();
        assert!(check.passed(), "{check:?}");
        assert_eq!(check.samples, 100);
        assert!(convergence_bound_check(&[], &b).is_err());
    }

    #[test]
    fn oversized_step_is_skipped() {
        let p = problems::quadratic();
        let r = quad_report(Some(0.05));
        let b = Bound::value_gap(&p, &r, -1.0 / 40.0).unwrap();
        assert_eq!(convergence_bound_check(&r.trace, &b).unwrap().status, CheckStatus::Skipped);
    }

    #[test]
    fn understated_floor_fails() {
        // A floor above the objective values makes the right-hand side negative.
        let p = problems::quadratic();
        let r = quad_report(None);
        let b = Bound::value_gap(&p, &r, 1e3).unwrap();
        assert_eq!(convergence_bound_check(&r.trace, &b).unwrap().status, CheckStatus::Fail);
    }

    #[test]
    fn constrained_bound_on_constrained_toy() {
        let p = problems::constrained_toy();
        let cfg = SolverConfig { gamma: 5.0, max_iters: 200, tol_proj_grad: None, ..SolverConfig::default() }
            .with_start(vec![0.2], vec![0.0]);
        let r = v_pbgd_constrained(&p, &cfg).unwrap();
        let exact = with_exact_metric(&p, &r).unwrap();
        let c_g = 2.0 * estimate_c_g(&p, 64).unwrap();
        let b = Bound::constrained_value_gap(&p, &exact, 0.0, c_g).unwrap();
        assert!(convergence_bound_check(&exact.trace, &b).unwrap().passed());
    }
}
