//! Define a bilevel problem through the builder and solve it.
//!
//! Upper: `f = (x - 2)² + y²`. Lower: `g = (y - x)²`, so `S(x) = {x}` and
//! the bilevel solution is `x = y = 1`.
//!
//! `cargo run --example custom_problem`

use pbgd::solvers::{pbgd, v_pbgd};
use pbgd::verify::finite_difference_grad;
use pbgd::{concat, split, PenaltyKind, ProblemSpec, SmoothnessConstants, SolverConfig, Vector};

fn v2(a: f64, b: f64) -> Vector {
    Vector::from_vec(vec![a, b])
}

fn main() -> pbgd::Result<()> {
    let problem = ProblemSpec::builder("shifted", 1, 1)
        .upper(|x, y| (x[0] - 2.0).powi(2) + y[0] * y[0], |x, y| v2(2.0 * (x[0] - 2.0), 2.0 * y[0]))
        .lower(|x, y| (y[0] - x[0]).powi(2), |x, y| v2(-2.0 * (y[0] - x[0]), 2.0 * (y[0] - x[0])))
        .hessian_products(
            |_, _, v| Vector::from_element(1, 2.0 * v[0]),
            |_, _, v| Vector::from_element(1, -2.0 * v[0]),
            |_, _, u| Vector::from_element(1, -2.0 * u[0]),
        )
        .lower_solution(|x| x.clone())
        .lower_value(|_| 0.0)
        .constants(SmoothnessConstants {
            l_f: Some(2.0),
            l_g: Some(4.0),
            l_g2: Some(0.0),
            mu: Some(0.25),
            rho: Some(1.0),
            ..Default::default()
        })
        .build()?;

    let z = v2(0.3, -0.7);
    let (x, y) = split(&z, 1);
    let upper = |z: &Vector| {
        let (x, y) = split(z, 1);
        problem.f(&x, &y).unwrap()
    };
    let fd = finite_difference_grad(upper, &concat(&x, &y), 1e-6)?;
    println!("grad f analytic {:?}, central difference {:?}", problem.f_grad(&x, &y)?.as_slice(), fd.as_slice());

    for gamma in [1.0, 10.0, 100.0] {
        let cfg = SolverConfig::default().with_gamma(gamma);
        let vg = v_pbgd(&problem, &cfg)?;
        // ‖∇_y g‖² = 4(y - x)² adds curvature 16γ on top of f's 2.
        let alpha = Some(1.0 / (2.0 + 16.0 * gamma));
        let gn = pbgd(&problem, &SolverConfig { penalty: PenaltyKind::GradNormSq, alpha, ..cfg })?;
        println!(
            "gamma {gamma:>5}: value gap (x, y) = ({:.5}, {:.5}); squared gradient norm (x, y) = ({:.5}, {:.5})",
            vg.x[0], vg.y[0], gn.x[0], gn.y[0]
        );
    }
    Ok(())
}
