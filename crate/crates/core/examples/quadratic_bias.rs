//! V-PBGD on `f = y`, `g = y²`: the penalized minimizer sits at `-1/(2γ)`,
//! so the bias to the bilevel solution `y = 0` shrinks like `1/γ`.
//!
//! `cargo run --example quadratic_bias`

use pbgd::problems;
use pbgd::solvers::v_pbgd;
use pbgd::SolverConfig;

fn main() -> pbgd::Result<()> {
    let problem = problems::quadratic();
    println!("{:>6} {:>14} {:>14} {:>8} {:>10}", "gamma", "y_K", "-1/(2 gamma)", "iters", "alpha");
    for gamma in [1.0, 3.0, 10.0, 30.0, 100.0] {
        let cfg = SolverConfig::default().with_gamma(gamma).with_start(vec![0.0], vec![1.0]);
        let report = v_pbgd(&problem, &cfg)?;
        println!(
            "{gamma:>6} {:>14.10} {:>14.10} {:>8} {:>10.3e}",
            report.y[0],
            -1.0 / (2.0 * gamma),
            report.iterations(),
            report.steps.alpha.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
