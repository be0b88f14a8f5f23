//! Where the penalty methods end up on nonconvex problems.
//!
//! On the toy problem V-PBGD lands near a local minimizer of `f(x, -x)`
//! from any start. On the intro example the value gap escapes the spurious
//! stationary point `y = 2π/3` of the squared-gradient penalty, which
//! G-PBGD cannot leave.
//!
//! `cargo run --release --example toy_landscape`

use std::f64::consts::PI;

use pbgd::problems;
use pbgd::solvers::{g_pbgd, v_pbgd};
use pbgd::SolverConfig;

fn main() -> pbgd::Result<()> {
    let toy = problems::toy_nc();
    let c = toy.constants();
    let gamma = 10.0;
    let alpha = 1.0 / (c.l_f.unwrap_or(1.0) + gamma * c.l_g.unwrap_or(1.0));
    println!("toy-nc, gamma = {gamma}, alpha = {alpha:.4e}");
    for (x0, y0) in [(0.2, 1.0), (1.0, -4.0), (1.7, 2.0), (2.5, -6.0), (3.0, 0.0)] {
        let cfg = SolverConfig { gamma, alpha: Some(alpha), max_iters: 200_000, ..SolverConfig::default() }
            .with_start(vec![x0], vec![y0]);
        let r = v_pbgd(&toy, &cfg)?;
        println!(
            "  start ({x0:>4}, {y0:>4}) -> x = {:.5}, y + x = {:+.2e}, {:?} after {}",
            r.x[0],
            r.y[0] + r.x[0],
            r.termination,
            r.iterations()
        );
    }

    let intro = problems::example_intro();
    let trap = 2.0 * PI / 3.0;
    println!("example-intro from y0 = 2π/3");
    let cfg = SolverConfig { gamma, max_iters: 50_000, ..SolverConfig::default() }.with_start(vec![0.0], vec![trap]);
    println!("  V-PBGD: y = {:+.6}", v_pbgd(&intro, &cfg)?.y[0]);
    let cfg = SolverConfig { alpha: Some(1e-4), tol_proj_grad: None, max_iters: 1000, ..cfg };
    println!("  G-PBGD: y = {:+.6} (moved {:.1e})", g_pbgd(&intro, &cfg)?.y[0], (g_pbgd(&intro, &cfg)?.y[0] - trap).abs());
    Ok(())
}
