//! One test per acceptance criterion. Each prints a single `PASS`/`FAIL`
//! line with the measured quantities, then asserts.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use pbgd::problems::{self, QUADRATIC_NOISE_STD};
use pbgd::proxlinear::pbpl;
use pbgd::runner::{cmd_hyperclean, cmd_sweep, AlphaRule, HypercleanRun, RunConfig, SweepSpec};
use pbgd::solvers::{g_pbgd, v_pbgd, v_pbgd_constrained, v_pbsgd, Algorithm};
use pbgd::verify::{
    check_all, check_inner_rate, convergence_bound_check, estimate_c_g, sample_point, with_exact_metric, Bound,
    CheckStatus,
};
use pbgd::{rng, InnerSchedule, SolverConfig, Termination};

fn verdict(criterion: u32, ok: bool, details: &str) {
    println!("{} criterion {criterion}: {details}", if ok { "PASS" } else { "FAIL" });
}

#[test]
fn criterion_1_quadratic_closed_form() {
    let p = problems::quadratic();
    let mut lines = Vec::new();
    let mut ok = true;
    for gamma in [1.0, 10.0, 100.0] {
        let cfg = SolverConfig::default().with_gamma(gamma).with_start(vec![0.0], vec![1.0]);
        let start = Instant::now();
        let r = v_pbgd(&p, &cfg).unwrap();
        let elapsed = start.elapsed();
        let target = -1.0 / (2.0 * gamma);
        let err = (r.y[0] - target).abs();
        let tol = 1e-6 * (1.0 + 1.0 / (2.0 * gamma));
        ok &= err <= tol && elapsed < Duration::from_secs(1);
        lines.push(format!("gamma {gamma}: |y+1/(2gamma)| = {err:.2e} (tol {tol:.2e}), {elapsed:?}"));
    }
    verdict(1, ok, &lines.join("; "));
    assert!(ok);
}

#[test]
fn criterion_2_gamma_scaling_on_toy() {
    let dir = tempfile::tempdir().unwrap();
    let base = RunConfig {
        problem: "toy-nc".into(),
        algorithm: Algorithm::VPbgd,
        solver: SolverConfig {
            max_iters: 1_000_000,
            inner_schedule: InnerSchedule::Fixed { iters: 30 },
            // ‖G‖² <= 1e-4.
            tol_proj_grad: Some(1e-2),
            seed: 0,
            ..SolverConfig::default()
        },
        out_dir: dir.path().to_path_buf(),
        ..RunConfig::default()
    };
    let spec = SweepSpec {
        base,
        gammas: vec![1.0, 3.0, 10.0, 30.0, 100.0],
        starts_per_gamma: 20,
        alpha_rule: AlphaRule::Auto,
    };
    let start = Instant::now();
    let out = cmd_sweep(&spec).unwrap();
    let elapsed = start.elapsed();
    let ps = out.penalty_slope.unwrap_or(f64::NAN);
    let is = out.iterations_slope.unwrap_or(f64::NAN);
    let ok = (-2.3..=-1.7).contains(&ps)
        && (0.7..=1.3).contains(&is)
        && out.failures.is_empty()
        && elapsed < Duration::from_secs(120);
    let per: Vec<String> = out
        .per_gamma
        .iter()
        .map(|g| format!("{}: p {:.3e} K {:.0}", g.gamma, g.geo_mean_final_penalty.unwrap_or(f64::NAN), g.geo_mean_iterations.unwrap_or(f64::NAN)))
        .collect();
    verdict(
        2,
        ok,
        &format!(
            "penalty slope {ps:.3} (want [-2.3,-1.7]), iterations slope {is:.3} (want [0.7,1.3]), {} failures, {elapsed:?} [{}]",
            out.failures.len(),
            per.join(", ")
        ),
    );
    assert!(ok);
}

/// Local minimizers of `φ(x) = f(x, -x)` on `[0, 3]` by dense grid search,
/// endpoints included.
fn toy_reduced_minimizers() -> Vec<f64> {
    let phi = |x: f64| {
        let s = 1.0 / (1.0 + (2.0 - 4.0 * x).exp());
        (2.0 - 4.0 * x).cos() * s + 0.5 * ((4.0 * x - 2.0).powi(2) + 1.0).ln()
    };
    let n = 300_000;
    let xs: Vec<f64> = (0..=n).map(|i| 3.0 * i as f64 / n as f64).collect();
    let vals: Vec<f64> = xs.iter().map(|&x| phi(x)).collect();
    (0..=n)
        .filter(|&i| (i == 0 || vals[i] <= vals[i - 1]) && (i == n || vals[i] <= vals[i + 1]))
        .map(|i| xs[i])
        .collect()
}

#[test]
fn criterion_3_landscape_and_traps() {
    let start = Instant::now();
    let minimizers = toy_reduced_minimizers();

    let entry = problems::lookup("toy-nc").unwrap();
    let toy = &entry.problem;
    let c = toy.constants();
    let gamma = 10.0;
    let alpha = 1.0 / (c.l_f.unwrap() + gamma * c.l_g.unwrap());
    let mut draw = rng::substream(0, rng::DATA, 3);
    let starts: Vec<_> = (0..1000).map(|_| sample_point(&entry, &mut draw)).collect();
    let finals: Vec<(f64, f64)> = starts
        .par_iter()
        .map(|(x0, y0)| {
            let cfg = SolverConfig {
                gamma,
                alpha: Some(alpha),
                max_iters: 200_000,
                tol_proj_grad: Some(1e-8),
                ..SolverConfig::default()
            }
            .with_start(x0.as_slice().to_vec(), y0.as_slice().to_vec());
            let r = v_pbgd(toy, &cfg).unwrap();
            (r.x[0], r.y[0])
        })
        .collect();
    let lower_misses = finals.iter().filter(|(x, y)| (y + x).abs() > 1e-3).count();
    let dist = |x: f64| minimizers.iter().map(|m| (x - m).abs()).fold(f64::INFINITY, f64::min);
    let upper_misses: Vec<f64> = finals.iter().map(|(x, _)| *x).filter(|&x| dist(x) > 1e-2).collect();
    let worst = finals.iter().map(|(x, _)| dist(*x)).fold(0.0, f64::max);

    let intro = problems::example_intro();
    let intro_worst = (0..=50)
        .map(|i| -2.0 + 5.0 * i as f64 / 50.0)
        .map(|y0| {
            let cfg = SolverConfig { gamma, max_iters: 100_000, ..SolverConfig::default() }.with_start(vec![0.0], vec![y0]);
            v_pbgd(&intro, &cfg).unwrap().y[0].abs()
        })
        .fold(0.0, f64::max);
    let trap = 2.0 * PI / 3.0;
    let cfg = SolverConfig { gamma, alpha: Some(1e-4), max_iters: 1000, tol_proj_grad: None, ..SolverConfig::default() }
        .with_start(vec![0.0], vec![trap]);
    let trap_drift = (g_pbgd(&intro, &cfg).unwrap().y[0] - trap).abs();
    let elapsed = start.elapsed();

    let ok = lower_misses == 0
        && upper_misses.is_empty()
        && intro_worst <= 0.05
        && trap_drift <= 1e-9
        && elapsed < Duration::from_secs(120);
    let mut sample: Vec<String> = upper_misses.iter().take(4).map(|x| format!("{x:.4}")).collect();
    sample.dedup();
    verdict(
        3,
        ok,
        &format!(
            "toy: {lower_misses}/1000 with |y+x| > 1e-3, {}/1000 with x farther than 1e-2 from {minimizers:.5?} \
             (worst {worst:.4}, e.g. x = {}); example-intro worst |y| {intro_worst:.2e}; G-PBGD drift {trap_drift:.1e}; {elapsed:?}",
            upper_misses.len(),
            sample.join(", ")
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_4_rate_monitors() {
    let mut lines = Vec::new();
    let mut ok = true;

    let quad = problems::quadratic();
    let gamma = 10.0;
    let cfg = SolverConfig { gamma, max_iters: 1000, tol_proj_grad: None, ..SolverConfig::default() }
        .with_start(vec![0.0], vec![1.0]);
    let r = v_pbgd(&quad, &cfg).unwrap();
    let bound = Bound::value_gap(&quad, &r, -1.0 / (4.0 * gamma)).unwrap();
    for k in [10, 100, 1000] {
        let check = convergence_bound_check(&r.trace[..k], &bound).unwrap();
        ok &= check.status == CheckStatus::Pass;
        lines.push(format!("value-gap bound, quadratic, K={k}: {:?} (residual {:.1e})", check.status, check.worst_residual));
    }

    let toy = problems::constrained_toy();
    let cfg = SolverConfig { gamma: 5.0, max_iters: 1000, tol_proj_grad: None, ..SolverConfig::default() }
        .with_start(vec![0.2], vec![0.0]);
    let r = with_exact_metric(&toy, &v_pbgd_constrained(&toy, &cfg).unwrap()).unwrap();
    let c_g = 2.0 * estimate_c_g(&toy, 201).unwrap();
    let bound = Bound::constrained_value_gap(&toy, &r, 0.0, c_g).unwrap();
    for k in [10, 100, 1000] {
        let check = convergence_bound_check(&r.trace[..k], &bound).unwrap();
        ok &= check.status == CheckStatus::Pass;
        lines.push(format!("constrained bound, constrained-toy, K={k}: {:?} (residual {:.1e})", check.status, check.worst_residual));
    }
    verdict(4, ok, &lines.join("; "));
    assert!(ok);
}

#[test]
fn criterion_5_inner_rate() {
    let mut lines = Vec::new();
    let mut ok = true;
    for name in ["quadratic", "example-intro", "toy-nc"] {
        let entry = problems::lookup(name).unwrap();
        let c = entry.problem.constants();
        let (l_g, mu) = (c.l_g.unwrap(), c.mu.unwrap());
        let mut draw = rng::substream(0, rng::DATA, 5);
        let check = check_inner_rate(&entry, 1.0 / l_g, mu, 100, 50, &mut draw).unwrap();
        let violations = check.details.len();
        ok &= check.status == CheckStatus::Pass;
        lines.push(format!("{name}: {} samples, {violations} violations", check.samples));
    }
    verdict(5, ok, &lines.join("; "));
    assert!(ok);
}

#[test]
fn criterion_6_exact_penalty_contrast() {
    let p = problems::quadratic();
    let cfg = SolverConfig { gamma: 1.0, max_iters: 2000, ..SolverConfig::default() }.with_start(vec![0.0], vec![1.0]);
    let prox = pbpl(&p, &cfg).unwrap();
    let smooth = v_pbgd(&p, &cfg).unwrap();
    let bound = Bound::prox_linear(&p, &prox, 0.0).unwrap();
    let check = convergence_bound_check(&prox.trace, &bound).unwrap();
    let ok = prox.y[0].abs() <= 1e-4 && (smooth.y[0] + 0.5).abs() <= 1e-3 && check.status == CheckStatus::Pass;
    verdict(
        6,
        ok,
        &format!(
            "PBPL y_K = {:.2e}, V-PBGD y_K = {:.6}, min-norm bound {:?} over {} rows",
            prox.y[0],
            smooth.y[0],
            check.status,
            prox.trace.len()
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_7_property_suite() {
    let start = Instant::now();
    let checks = check_all(0);
    let elapsed = start.elapsed();
    let failed: Vec<&str> = checks.iter().filter(|c| c.status == CheckStatus::Fail).map(|c| c.name.as_str()).collect();
    let passed = checks.iter().filter(|c| c.status == CheckStatus::Pass).count();
    let ok = failed.is_empty() && passed > 0 && elapsed < Duration::from_secs(60);
    verdict(7, ok, &format!("{passed} pass, {} fail {failed:?}, {elapsed:?}", failed.len()));
    assert!(ok);
}

fn stochastic_finals(batch: usize) -> Vec<f64> {
    let p = problems::quadratic_noisy(QUADRATIC_NOISE_STD);
    (0..20u64)
        .into_par_iter()
        .map(|seed| {
            let cfg = SolverConfig {
                gamma: 10.0,
                max_iters: 2000,
                inner_schedule: InnerSchedule::Fixed { iters: 10 },
                tol_proj_grad: None,
                batch_size: batch,
                seed,
                ..SolverConfig::default()
            }
            .with_start(vec![0.0], vec![1.0]);
            v_pbsgd(&p, &cfg).unwrap().y[0]
        })
        .collect()
}

fn sample_variance(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64
}

#[test]
fn criterion_8_stochastic_sanity() {
    let y64 = stochastic_finals(64);
    let y16 = stochastic_finals(16);
    let mean_err = y64.iter().map(|y| (y + 0.05).abs()).sum::<f64>() / y64.len() as f64;
    let ratio = sample_variance(&y16) / sample_variance(&y64);
    let ok = mean_err <= 0.02 && (2.5..=5.5).contains(&ratio);
    verdict(8, ok, &format!("mean |y_K + 0.05| = {mean_err:.2e} (M=64), variance ratio M=16/M=64 = {ratio:.3}"));
    assert!(ok);
}

#[test]
fn criterion_9_hyper_cleaning() {
    let dir = tempfile::tempdir().unwrap();
    let run = HypercleanRun { out_dir: dir.path().to_path_buf(), ..HypercleanRun::default() };
    let a = cmd_hyperclean(&run).unwrap();
    let again = cmd_hyperclean(&run).unwrap();
    let sep = a.separation.unwrap_or(f64::NAN);
    let ok = sep >= 0.15
        && a.val_accuracy_learned > a.val_accuracy_uniform
        && a == again
        && a.termination != Termination::Diverged;
    verdict(
        9,
        ok,
        &format!(
            "separation {sep:.3}, validation accuracy uniform {:.3} learned {:.3}, deterministic {}",
            a.val_accuracy_uniform,
            a.val_accuracy_learned,
            a == again
        ),
    );
    assert!(ok);
}
