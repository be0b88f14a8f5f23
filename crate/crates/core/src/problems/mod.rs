//! Built-in problems and the named catalog used by the runner and checks.

mod hyperclean;
mod scalar;

pub use hyperclean::{
    generate_data, hyperclean_instance, hyperclean_synthetic, HypercleanData, HypercleanInstance,
    HypercleanParams,
};
pub use scalar::{constrained_toy, example_intro, quadratic, quadratic_noisy, toy_nc};

use crate::error::{Error, Result};
use crate::penalty::PenaltyKind;
use crate::problem::ProblemSpec;

/// Noise level of the catalog's `quadratic-noisy` entry.
pub const QUADRATIC_NOISE_STD: f64 = 0.1;

/// A named problem with the facts the verification suite checks.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub problem: ProblemSpec,
    /// Penalty kinds declared to satisfy the squared-distance bound, with ρ.
    pub declared: Vec<(PenaltyKind, f64)>,
    pub has_analytic_solution_set: bool,
    /// `‖∇_y g(x, ·)‖` is convex.
    pub grad_norm_convex: bool,
    /// A lower bound on `f` over `C × U`, if one is known.
    pub upper_infimum: Option<f64>,
    /// Per-coordinate sampling ranges for randomized checks.
    pub sample_x: (f64, f64),
    pub sample_y: (f64, f64),
}

pub const CATALOG_NAMES: [&str; 6] =
    ["example-intro", "quadratic", "quadratic-noisy", "toy-nc", "constrained-toy", "hyperclean"];

fn entry(name: &'static str) -> Result<CatalogEntry> {
    use PenaltyKind::{GradNormSq, ValueGap};
    Ok(match name {
        "example-intro" => CatalogEntry {
            name,
            problem: example_intro(),
            declared: vec![(ValueGap, 1.0), (GradNormSq, 0.8)],
            has_analytic_solution_set: true,
            grad_norm_convex: false,
            upper_infimum: Some(0.0),
            sample_x: (-3.0, 3.0),
            sample_y: (-5.0, 5.0),
        },
        "quadratic" | "quadratic-noisy" => CatalogEntry {
            name,
            problem: if name == "quadratic" { quadratic() } else { quadratic_noisy(QUADRATIC_NOISE_STD) },
            declared: vec![(ValueGap, 1.0), (GradNormSq, 1.0)],
            has_analytic_solution_set: true,
            grad_norm_convex: true,
            upper_infimum: None,
            sample_x: (-3.0, 3.0),
            sample_y: (-3.0, 3.0),
        },
        "toy-nc" => CatalogEntry {
            name,
            problem: toy_nc(),
            declared: vec![(ValueGap, 1.0), (GradNormSq, 2.1)],
            has_analytic_solution_set: true,
            grad_norm_convex: false,
            // |cos| <= 1 and the log term is >= 0.
            upper_infimum: Some(-1.0),
            sample_x: (0.0, 3.0),
            sample_y: (-8.0, 5.0),
        },
        "constrained-toy" => CatalogEntry {
            name,
            problem: constrained_toy(),
            declared: vec![(ValueGap, 1.0)],
            has_analytic_solution_set: true,
            grad_norm_convex: true,
            upper_infimum: Some(0.0),
            sample_x: (0.0, 2.0),
            sample_y: (0.0, 1.0),
        },
        "hyperclean" => {
            let params = HypercleanParams::default();
            CatalogEntry {
                name,
                problem: hyperclean_synthetic(&params)?,
                declared: vec![(ValueGap, 2.0 / params.lambda_reg)],
                has_analytic_solution_set: false,
                grad_norm_convex: false,
                upper_infimum: Some(0.0),
                sample_x: (-3.0, 3.0),
                sample_y: (-2.0, 2.0),
            }
        }
        other => return Err(Error::InvalidArgument(format!("unknown problem `{other}`"))),
    })
}

/// Look a catalog entry up by name; `_` and `-` are interchangeable.
pub fn lookup(name: &str) -> Result<CatalogEntry> {
    let canonical = name.replace('_', "-");
    let name = CATALOG_NAMES
        .iter()
        .find(|n| **n == canonical)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown problem `{name}`")))?;
    entry(name)
}

pub fn catalog() -> Vec<CatalogEntry> {
    CATALOG_NAMES.iter().map(|n| entry(n).expect("catalog entries build")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_name_resolves() {
        for name in CATALOG_NAMES {
            assert_eq!(lookup(name).unwrap().name, name);
        }
        assert_eq!(lookup("toy_nc").unwrap().name, "toy-nc");
        assert!(lookup("nope").is_err());
    }

    #[test]
    fn declared_rho_matches_constants() {
        for e in catalog() {
            let vg = e.declared.iter().find(|(k, _)| *k == PenaltyKind::ValueGap).map(|d| d.1);
            assert_eq!(vg, e.problem.constants().rho, "{}", e.name);
        }
    }
}
