//! Penalty-based bilevel gradient methods.
//!
//! A bilevel problem minimizes an upper objective `f(x, y)` subject to `y`
//! minimizing a lower objective `g(x, ·)`. This crate replaces the lower-level
//! constraint by a penalty `γ·p(x, y)` and solves the resulting single-level
//! problem with first-order methods:
//!
//! * [`solvers::pbgd`] - projected gradient on `f + γp` for a chosen penalty,
//! * [`solvers::v_pbgd`] / [`solvers::v_pbgd_constrained`] - value-gap penalty
//!   `g(x,y) - v(x)` with an inner lower-level solve,
//! * [`solvers::g_pbgd`] - squared lower-level gradient norm penalty,
//! * [`solvers::v_pbsgd`] - stochastic value-gap variant with minibatches,
//! * [`proxlinear::pbpl`] - prox-linear method on the exact penalty
//!   `γ‖∇_y g(x,y)‖`.
//!
//! The [`problems`] catalog ships the desk-scale instances used throughout the
//! tests and examples, and [`verify`] holds the independent checks
//! (finite differences, squared-distance bounds, rate monitors).

// `!(a >= b)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod constraint;
pub mod error;
pub mod inner;
pub mod penalty;
pub mod problem;
pub mod problems;
pub mod proxlinear;
pub mod report;
pub mod rng;
pub mod runner;
pub mod solvers;
pub mod verify;

pub use config::{InnerSchedule, SolverConfig};
pub use constraint::ConstraintSet;
pub use error::{Error, Result};
pub use penalty::PenaltyKind;
pub use problem::{ProblemSpec, SmoothnessConstants};
pub use report::{IterateRecord, SolveReport, Termination};

/// Dense real vector used for `x`, `y` and the stacked point `z = (x, y)`.
pub type Vector = nalgebra::DVector<f64>;

/// Stack `x` and `y` into `z = (x, y)`.
pub fn concat(x: &Vector, y: &Vector) -> Vector {
    let mut z = Vector::zeros(x.len() + y.len());
    z.rows_mut(0, x.len()).copy_from(x);
    z.rows_mut(x.len(), y.len()).copy_from(y);
    z
}

/// Split `z` back into its `x` block (first `dx` entries) and `y` block.
pub fn split(z: &Vector, dx: usize) -> (Vector, Vector) {
    let x = z.rows(0, dx).into_owned();
    let y = z.rows(dx, z.len() - dx).into_owned();
    (x, y)
}

pub(crate) fn all_finite(v: &Vector) -> bool {
    v.iter().all(|c| c.is_finite())
}
