//! One-dimensional instances with closed-form lower-level solutions.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::constraint::ConstraintSet;
use crate::problem::{ProblemSpec, SmoothnessConstants};
use crate::Vector;

fn v1(a: f64) -> Vector {
    Vector::from_element(1, a)
}

fn v2(a: f64, b: f64) -> Vector {
    Vector::from_vec(vec![a, b])
}

/// `f = sin²(y - 2π/3)`, `g = y² + 2 sin² y`, both independent of `x`.
///
/// `S(x) = {0}` and `v = 0`. Constants: `|f_y| <= 1` (L = 1),
/// `|f_yy| <= 2`, `g_yy = 2 + 4 cos 2y ∈ [-2, 6]`, `|g_yyy| <= 8`.
/// PL modulus sampled at 0.99, declared 1; `g - v >= y²` gives ρ = 1.
pub fn example_intro() -> ProblemSpec {
    let shift = 2.0 * PI / 3.0;
    ProblemSpec::builder("example-intro", 1, 1)
        .upper(
            move |_, y| (y[0] - shift).sin().powi(2),
            move |_, y| v2(0.0, (2.0 * (y[0] - shift)).sin()),
        )
        .lower(
            |_, y| y[0] * y[0] + 2.0 * y[0].sin().powi(2),
            |_, y| v2(0.0, 2.0 * y[0] + 2.0 * (2.0 * y[0]).sin()),
        )
        .hessian_products(
            |_, y, v| v1((2.0 + 4.0 * (2.0 * y[0]).cos()) * v[0]),
            |_, _, _| v1(0.0),
            |_, _, _| v1(0.0),
        )
        .lower_solution(|_| v1(0.0))
        .lower_value(|_| 0.0)
        .constants(SmoothnessConstants {
            upper_lipschitz: Some(1.0),
            l_f: Some(2.0),
            l_g: Some(6.0),
            l_g2: Some(8.0),
            mu: Some(1.0),
            rho: Some(1.0),
            l_v: Some(0.0),
            ..Default::default()
        })
        .build()
        .expect("example-intro is well formed")
}

fn quadratic_builder(name: &str) -> crate::problem::ProblemBuilder {
    // f = y, g = y²: L = 1, L_f = 0, L_g = 2, PL with μ = 1/4 (‖2y‖² = 4y²),
    // and g - v = y² = dist² so ρ = 1.
    ProblemSpec::builder(name, 1, 1)
        .upper(|_, y| y[0], |_, _| v2(0.0, 1.0))
        .lower(|_, y| y[0] * y[0], |_, y| v2(0.0, 2.0 * y[0]))
        .hessian_products(|_, _, v| v1(2.0 * v[0]), |_, _, _| v1(0.0), |_, _, _| v1(0.0))
        .lower_solution(|_| v1(0.0))
        .lower_value(|_| 0.0)
        .constants(SmoothnessConstants {
            upper_lipschitz: Some(1.0),
            l_f: Some(0.0),
            l_g: Some(2.0),
            l_g2: Some(0.0),
            mu: Some(0.25),
            rho: Some(1.0),
            sigma: Some(2.0),
            l_v: Some(0.0),
            ..Default::default()
        })
}

/// `f = y`, `g = y²`. Bilevel solution `y = 0`; the value-gap penalized
/// problem is minimized at `y = -1/(2γ)`.
pub fn quadratic() -> ProblemSpec {
    quadratic_builder("quadratic").build().expect("quadratic is well formed")
}

/// Standard normal pair for sample id `sample` on stream `stream`.
fn noise_pair(sample: u64, stream: u64, std: f64) -> Vector {
    let mut rng = ChaCha8Rng::seed_from_u64(sample);
    rng.set_stream(stream);
    let normal = Normal::new(0.0, std).expect("std is finite and >= 0");
    v2(normal.sample(&mut rng), normal.sample(&mut rng))
}

/// [`quadratic`] with stochastic gradient oracles: every component of `∇f`
/// and `∇g` gets independent `N(0, std²)` noise determined by the sample id.
pub fn quadratic_noisy(std: f64) -> ProblemSpec {
    assert!(std.is_finite() && std >= 0.0, "noise std must be finite and >= 0");
    quadratic_builder("quadratic-noisy")
        .stochastic(
            Some(move |_: &Vector, _: &Vector, s: u64| v2(0.0, 1.0) + noise_pair(s, 1, std)),
            move |_: &Vector, y: &Vector, s: u64| v2(0.0, 2.0 * y[0]) + noise_pair(s, 2, std),
        )
        .build()
        .expect("quadratic-noisy is well formed")
}

/// The nonconvex toy problem on `C = [0, 3]`:
/// `f = cos(4y+2)/(1+e^{2-4x}) + ½ ln((4x-2)²+1)`, `g = (y+x)² + x sin²(y+x)`.
///
/// `S(x) = {-x}` and `v = 0`. With `u = y + x`, `g - v >= u²` gives ρ = 1;
/// `sup g / ‖∇_y g‖²` over `x ∈ [0,3]` is about 2.85 (μ = 3). `L = 4` is exact.
/// `L_f`, `L_g`, `L_g2` and the grad-norm ρ are grid estimates over
/// `[0,3] × ℝ` and are labeled estimated.
pub fn toy_nc() -> ProblemSpec {
    fn sig(x: f64) -> f64 {
        1.0 / (1.0 + (2.0 - 4.0 * x).exp())
    }
    ProblemSpec::builder("toy-nc", 1, 1)
        .upper(
            |x, y| {
                let (x, y) = (x[0], y[0]);
                (4.0 * y + 2.0).cos() * sig(x) + 0.5 * ((4.0 * x - 2.0).powi(2) + 1.0).ln()
            },
            |x, y| {
                let (x, y) = (x[0], y[0]);
                let s = sig(x);
                let a = 4.0 * x - 2.0;
                v2(
                    (4.0 * y + 2.0).cos() * 4.0 * s * (1.0 - s) + 4.0 * a / (a * a + 1.0),
                    -4.0 * (4.0 * y + 2.0).sin() * s,
                )
            },
        )
        .lower(
            |x, y| {
                let u = y[0] + x[0];
                u * u + x[0] * u.sin().powi(2)
            },
            |x, y| {
                let u = y[0] + x[0];
                let gy = 2.0 * u + x[0] * (2.0 * u).sin();
                v2(gy + u.sin().powi(2), gy)
            },
        )
        .hessian_products(
            |x, y, v| {
                let u = y[0] + x[0];
                v1((2.0 + 2.0 * x[0] * (2.0 * u).cos()) * v[0])
            },
            |x, y, v| {
                let u = y[0] + x[0];
                v1((2.0 + (2.0 * u).sin() + 2.0 * x[0] * (2.0 * u).cos()) * v[0])
            },
            |x, y, u_dx| {
                let u = y[0] + x[0];
                v1((2.0 + (2.0 * u).sin() + 2.0 * x[0] * (2.0 * u).cos()) * u_dx[0])
            },
        )
        .upper_set(ConstraintSet::interval(0.0, 3.0).expect("valid interval"))
        .lower_solution(|x| v1(-x[0]))
        .lower_value(|_| 0.0)
        .constants(SmoothnessConstants {
            upper_lipschitz: Some(4.0),
            l_f: Some(17.0),
            l_g: Some(16.2),
            l_g2: Some(25.0),
            mu: Some(3.0),
            rho: Some(1.0),
            l_v: Some(0.0),
            estimated: vec!["l_f".into(), "l_g".into(), "l_g2".into()],
            ..Default::default()
        })
        .build()
        .expect("toy-nc is well formed")
}

/// `f = (x-1)² + (y-1)²`, `g = (y-x)²` on `C = [0,2]`, `U = [0,1]`.
///
/// `S(x) = clip(x, 0, 1)`, `v = max(x-1, 0)²`. For `x > 1`,
/// `g - v = (1-y)(2x-1-y) >= (1-y)²`, so quadratic growth holds with
/// μ = ρ = 1. `∇v` is 2-Lipschitz. Bilevel solution `(1, 1)`.
pub fn constrained_toy() -> ProblemSpec {
    ProblemSpec::builder("constrained-toy", 1, 1)
        .upper(
            |x, y| (x[0] - 1.0).powi(2) + (y[0] - 1.0).powi(2),
            |x, y| v2(2.0 * (x[0] - 1.0), 2.0 * (y[0] - 1.0)),
        )
        .lower(
            |x, y| (y[0] - x[0]).powi(2),
            |x, y| v2(-2.0 * (y[0] - x[0]), 2.0 * (y[0] - x[0])),
        )
        .hessian_products(|_, _, v| v1(2.0 * v[0]), |_, _, v| v1(-2.0 * v[0]), |_, _, u| v1(-2.0 * u[0]))
        .upper_set(ConstraintSet::interval(0.0, 2.0).expect("valid interval"))
        .lower_set(ConstraintSet::interval(0.0, 1.0).expect("valid interval"))
        .lower_solution(|x| v1(x[0].clamp(0.0, 1.0)))
        .lower_value(|x| (x[0] - 1.0).max(0.0).powi(2))
        .constants(SmoothnessConstants {
            upper_lipschitz: Some(2.0),
            l_f: Some(2.0),
            l_g: Some(4.0),
            l_g2: Some(0.0),
            mu: Some(1.0),
            rho: Some(1.0),
            l_v: Some(2.0),
            ..Default::default()
        })
        .build()
        .expect("constrained-toy is well formed")
}
