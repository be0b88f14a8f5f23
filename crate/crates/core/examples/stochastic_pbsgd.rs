//! V-PBSGD with noisy gradients: larger minibatches shrink the spread of
//! the final iterate across seeds roughly like `1/M`.
//!
//! `cargo run --release --example stochastic_pbsgd`

use pbgd::problems;
use pbgd::solvers::v_pbsgd;
use pbgd::{InnerSchedule, SolverConfig};

fn main() -> pbgd::Result<()> {
    let problem = problems::quadratic_noisy(0.1);
    for batch in [4, 16, 64] {
        let mut ys = Vec::new();
        for seed in 0..50 {
            let cfg = SolverConfig {
                gamma: 10.0,
                max_iters: 1000,
                inner_schedule: InnerSchedule::Fixed { iters: 10 },
                tol_proj_grad: None,
                batch_size: batch,
                seed,
                ..SolverConfig::default()
            }
            .with_start(vec![0.0], vec![1.0]);
            ys.push(v_pbsgd(&problem, &cfg)?.y[0]);
        }
        let mean = ys.iter().sum::<f64>() / ys.len() as f64;
        let var = ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / (ys.len() - 1) as f64;
        println!("M = {batch:>2}: mean y_K = {mean:+.5}, variance {var:.3e}");
    }
    Ok(())
}
