//! Independent checks: finite differences, penalty samplers, Danskin,
//! projection properties, inner-loop rates, rate-bound monitors and
//! log-log slope fits.

mod bounds;
mod fd;
mod samplers;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use bounds::{
    convergence_bound_check, estimate_c_g, fit_loglog_slope, with_exact_metric, Bound, BoundKind,
};
pub use fd::{check_gradients, check_hvps, finite_difference_grad, FD_STEP, FD_TOLERANCE};
pub use samplers::{
    check_danskin, check_descent, check_inner_rate, check_lower_stationarity, check_projection_properties,
    check_squared_distance_bound, check_surrogate_sandwich, reference_lower_solution, sample_point,
    DANSKIN_TOLERANCE,
};

use crate::problems::{self, CatalogEntry};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// A precondition of the checked statement does not hold.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub status: CheckStatus,
    pub worst_residual: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub details: Vec<String>,
}

impl CheckReport {
    /// Builds a report from residuals; passes iff every residual is within
    /// `tolerance`. At most ten failure details are kept.
    pub fn from_residuals<I>(name: impl Into<String>, tolerance: f64, residuals: I) -> CheckReport
    where
        I: IntoIterator<Item = (f64, String)>,
    {
        let mut worst = 0.0_f64;
        let mut samples = 0;
        let mut details = Vec::new();
        let mut failed = false;
        for (r, what) in residuals {
            samples += 1;
            if r.is_nan() || r > tolerance {
                failed = true;
                if details.len() < 10 {
                    details.push(format!("{what}: residual {r:.3e}"));
                }
            }
            worst = if r.is_nan() { f64::NAN } else { worst.max(r) };
        }
        CheckReport {
            name: name.into(),
            status: if failed { CheckStatus::Fail } else { CheckStatus::Pass },
            worst_residual: worst,
            tolerance,
            samples,
            details,
        }
    }

    pub fn skipped(name: impl Into<String>, reason: impl Into<String>) -> CheckReport {
        CheckReport {
            name: name.into(),
            status: CheckStatus::Skipped,
            worst_residual: 0.0,
            tolerance: 0.0,
            samples: 0,
            details: vec![reason.into()],
        }
    }

    pub fn failed_with(name: impl Into<String>, reason: impl Into<String>) -> CheckReport {
        CheckReport {
            name: name.into(),
            status: CheckStatus::Fail,
            worst_residual: f64::INFINITY,
            tolerance: 0.0,
            samples: 0,
            details: vec![reason.into()],
        }
    }

    pub fn passed(&self) -> bool {
        self.status == CheckStatus::Pass
    }

    /// Pass or skipped.
    pub fn ok(&self) -> bool {
        self.status != CheckStatus::Fail
    }
}

/// Samples per randomized check in [`check_entry`].
pub const DEFAULT_SAMPLES: usize = 100;

fn named(entry: &CatalogEntry, report: crate::Result<CheckReport>, what: &str) -> CheckReport {
    let mut r = report.unwrap_or_else(|e| CheckReport::failed_with(what, e.to_string()));
    r.name = format!("{}/{}", entry.name, r.name);
    r
}

/// The full battery for one catalog entry.
pub fn check_entry(entry: &CatalogEntry, seed: u64) -> Vec<CheckReport> {
    let p = &entry.problem;
    let n = DEFAULT_SAMPLES;
    let mut rng = rng::substream(seed, entry.name, 0);
    let mut out = Vec::new();
    let small = p.dx() + p.dy() <= 16;
    let fd_samples = if small { n } else { 5 };
    out.push(named(entry, check_gradients(entry, fd_samples, &mut rng), "gradients"));
    if p.has_hvp() {
        out.push(named(entry, check_hvps(entry, fd_samples, &mut rng), "hvps"));
    }
    out.push(named(entry, check_lower_stationarity(entry, if small { n } else { 5 }, &mut rng), "lower-stationarity"));
    let dist_samples = if small { n } else { 10 };
    for &(kind, rho) in &entry.declared {
        let r = check_squared_distance_bound(entry, kind, rho, dist_samples, &mut rng);
        out.push(named(entry, r, &format!("squared-distance-{kind}")));
    }
    let danskin_points = if small { 20 } else { 2 };
    for i in 0..danskin_points {
        let (x, _) = sample_point(entry, &mut rng);
        let mut r = named(entry, check_danskin(p, &x, FD_STEP), "danskin");
        r.name = format!("{}#{i}", r.name);
        out.push(r);
    }
    out.push(named(entry, check_descent(entry, dist_samples, 20, &mut rng), "inner-descent"));
    if p.lower_unconstrained() && entry.has_analytic_solution_set {
        if let (Some(beta), Some(rho)) = (p.constants().l_g.map(|l| 1.0 / l), p.constants().rho) {
            out.push(named(entry, check_inner_rate(entry, beta, rho, n, 50, &mut rng), "inner-rate"));
        }
    }
    if p.lower_unconstrained() && p.has_jacobian() && p.constants().l_f.is_some() && p.constants().l_g2.is_some() {
        out.push(named(entry, check_surrogate_sandwich(entry, 2.0, n, &mut rng), "surrogate-sandwich"));
    }
    out
}

/// Projection properties of every constraint-set kind.
pub fn check_projections(seed: u64) -> Vec<CheckReport> {
    use crate::ConstraintSet;
    let sets = vec![
        ("full-space", ConstraintSet::FullSpace, 3),
        ("box", ConstraintSet::boxed(vec![-1.0, 0.0, 2.0], vec![1.0, 0.5, 3.0]).expect("valid box"), 3),
        ("interval", ConstraintSet::interval(0.0, 3.0).expect("valid interval"), 1),
        ("ball", ConstraintSet::ball(vec![0.5, -0.5], 1.5).expect("valid ball"), 2),
        ("simplex", ConstraintSet::simplex(1.0).expect("valid simplex"), 4),
    ];
    let mut rng = rng::substream(seed, "projections", 0);
    sets.into_iter()
        .map(|(name, set, dim)| {
            let mut r = check_projection_properties(&set, dim, DEFAULT_SAMPLES, &mut rng)
                .unwrap_or_else(|e| CheckReport::failed_with("projection", e.to_string()));
            r.name = format!("projection/{name}");
            r
        })
        .collect()
}

/// Every check over the whole catalog, entries in parallel.
pub fn check_all(seed: u64) -> Vec<CheckReport> {
    let mut reports: Vec<CheckReport> =
        problems::catalog().par_iter().flat_map_iter(|e| check_entry(e, seed)).collect();
    reports.extend(check_projections(seed));
    reports
}

/// Uniform draw from `[lo, hi]`, degenerate ranges allowed.
pub(crate) fn uniform<R: Rng + ?Sized>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_from_residuals() {
        let r = CheckReport::from_residuals("x", 1e-3, vec![(1e-4, "a".into()), (2e-3, "b".into())]);
        assert_eq!(r.status, CheckStatus::Fail);
        assert_eq!(r.samples, 2);
        assert_eq!(r.worst_residual, 2e-3);
        assert_eq!(r.details.len(), 1);
        let ok = CheckReport::from_residuals("y", 1e-3, vec![(1e-4, "a".into())]);
        assert!(ok.passed() && ok.worst_residual <= ok.tolerance);
    }
}
