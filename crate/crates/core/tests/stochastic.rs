//! Variance scaling of the stochastic solver with the minibatch size.

use rayon::prelude::*;

use pbgd::problems::{self, QUADRATIC_NOISE_STD};
use pbgd::solvers::v_pbsgd;
use pbgd::{InnerSchedule, SolverConfig};

fn finals(batch: usize, seeds: std::ops::Range<u64>) -> Vec<f64> {
    let p = problems::quadratic_noisy(QUADRATIC_NOISE_STD);
    seeds
        .into_par_iter()
        .map(|seed| {
            let cfg = SolverConfig {
                gamma: 10.0,
                max_iters: 300,
                inner_schedule: InnerSchedule::Fixed { iters: 1 },
                tol_proj_grad: None,
                batch_size: batch,
                seed,
                ..SolverConfig::default()
            }
            .with_start(vec![0.0], vec![-0.05]);
            v_pbsgd(&p, &cfg).unwrap().y[0]
        })
        .collect()
}

fn variance(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

#[test]
fn stationary_variance_matches_the_linear_recursion() {
    // With α = 1/50 and γ = 10, y_{k+1} = 0.6 y_k - 0.02 - α ξ_k where ξ_k
    // averages M draws of N(0, σ²(1 + γ²)). The stationary variance is
    // α² σ² (1 + γ²) / (M (1 - 0.36)).
    let sigma2 = QUADRATIC_NOISE_STD * QUADRATIC_NOISE_STD * 101.0;
    for batch in [4, 16] {
        let ys = finals(batch, 0..2000);
        let predicted = 0.02f64.powi(2) * sigma2 / (batch as f64 * 0.64);
        let mean = ys.iter().sum::<f64>() / ys.len() as f64;
        let ratio = variance(&ys) / predicted;
        // 2000 samples: the sample variance has relative sd about 0.032.
        assert!((ratio - 1.0).abs() < 0.13, "M = {batch}: ratio {ratio}");
        assert!((mean + 0.05).abs() < 4.0 * (predicted / 2000.0).sqrt(), "M = {batch}: mean {mean}");
    }
}
