//! Penalty and iteration counts against γ on the toy problem, with fitted
//! log-log slopes. Writes `sweep.csv` and `slopes.json` to a temp folder.
//!
//! `cargo run --release --example gamma_sweep`

use pbgd::runner::{cmd_sweep, AlphaRule, RunConfig, SweepSpec};
use pbgd::solvers::Algorithm;
use pbgd::{InnerSchedule, SolverConfig};

fn main() -> pbgd::Result<()> {
    let out_dir = std::env::temp_dir().join("pbgd-gamma-sweep");
    let spec = SweepSpec {
        base: RunConfig {
            problem: "toy-nc".into(),
            algorithm: Algorithm::VPbgd,
            solver: SolverConfig {
                max_iters: 1_000_000,
                inner_schedule: InnerSchedule::Fixed { iters: 30 },
                tol_proj_grad: Some(1e-2),
                ..SolverConfig::default()
            },
            out_dir: out_dir.clone(),
            ..RunConfig::default()
        },
        gammas: vec![1.0, 3.0, 10.0, 30.0, 100.0],
        starts_per_gamma: 8,
        alpha_rule: AlphaRule::Auto,
    };
    let out = cmd_sweep(&spec)?;
    for g in &out.per_gamma {
        println!(
            "gamma {:>5}: {}/{} reached, penalty {:.3e}, iterations {:.0}",
            g.gamma,
            g.reached,
            g.runs,
            g.geo_mean_final_penalty.unwrap_or(f64::NAN),
            g.geo_mean_iterations.unwrap_or(f64::NAN)
        );
    }
    println!("penalty slope    {:?}", out.penalty_slope);
    println!("iteration slope  {:?}", out.iterations_slope);
    println!("files in {}", out_dir.display());
    Ok(())
}
