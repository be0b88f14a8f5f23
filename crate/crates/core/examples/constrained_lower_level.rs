//! Constrained lower level `min_{y ∈ [0,1]} (y - x)²` with V-PBGD using
//! projected inner steps, monitored against its rate bound.
//!
//! `cargo run --example constrained_lower_level`

use pbgd::problems;
use pbgd::solvers::v_pbgd_constrained;
use pbgd::verify::{convergence_bound_check, estimate_c_g, with_exact_metric, Bound};
use pbgd::SolverConfig;

fn main() -> pbgd::Result<()> {
    let problem = problems::constrained_toy();
    for gamma in [5.0, 50.0] {
        let cfg = SolverConfig { gamma, max_iters: 1000, tol_proj_grad: None, ..SolverConfig::default() }
            .with_start(vec![0.2], vec![0.0]);
        let report = v_pbgd_constrained(&problem, &cfg)?;
        println!(
            "gamma {gamma:>4}: (x, y) = ({:.6}, {:.6}), penalty {:.3e}, alpha {:.3e}",
            report.x[0],
            report.y[0],
            report.last().map_or(f64::NAN, |r| r.penalty_value),
            report.steps.alpha.unwrap_or(f64::NAN)
        );
        let exact = with_exact_metric(&problem, &report)?;
        let c_g = 2.0 * estimate_c_g(&problem, 201)?;
        let bound = Bound::constrained_value_gap(&problem, &exact, 0.0, c_g)?;
        let check = convergence_bound_check(&exact.trace, &bound)?;
        println!("  running-mean bound: {:?} over {} prefixes", check.status, check.samples);
    }
    Ok(())
}
