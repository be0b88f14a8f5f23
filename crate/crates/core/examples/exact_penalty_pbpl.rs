//! The exact penalty `γ‖∇_y g‖` solved by the prox-linear method recovers
//! `y = 0` on the quadratic once `γ > 1/2`, where the value gap stays
//! biased at `-1/(2γ)`. Below `γ = 1/2` the exact penalty is unbounded
//! below and PBPL runs off to `-∞`.
//!
//! `cargo run --example exact_penalty_pbpl`

use pbgd::problems;
use pbgd::proxlinear::pbpl;
use pbgd::solvers::v_pbgd;
use pbgd::verify::{convergence_bound_check, Bound};
use pbgd::SolverConfig;

fn main() -> pbgd::Result<()> {
    let quad = problems::quadratic();
    for gamma in [0.25, 1.0, 4.0] {
        let cfg = SolverConfig { gamma, max_iters: 2000, ..SolverConfig::default() }.with_start(vec![0.0], vec![1.0]);
        let prox = pbpl(&quad, &cfg)?;
        let smooth = v_pbgd(&quad, &cfg)?;
        println!("gamma {gamma:>4}: PBPL y = {:+.3e}   V-PBGD y = {:+.6}", prox.y[0], smooth.y[0]);
    }

    let intro = problems::example_intro();
    let cfg = SolverConfig { gamma: 2.0, max_iters: 5000, ..SolverConfig::default() }.with_start(vec![0.0], vec![0.5]);
    let r = pbpl(&intro, &cfg)?;
    let bound = Bound::prox_linear(&intro, &r, 0.0)?;
    let check = convergence_bound_check(&r.trace, &bound)?;
    println!(
        "example-intro, gamma 2: y = {:+.3e} after {} steps (t = {:.3e}); min-norm bound {:?}",
        r.y[0],
        r.iterations(),
        r.steps.prox_step.unwrap_or(f64::NAN),
        check.status
    );
    Ok(())
}
