//! Closed convex sets with exact Euclidean projections.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::Vector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintSet {
    FullSpace,
    /// Per-coordinate bounds `lower[i] <= v[i] <= upper[i]`.
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
    /// `{v : v >= 0, sum(v) = scale}`.
    Simplex { scale: f64 },
    /// Same scalar bounds `lo <= v[i] <= hi` on every coordinate.
    Interval { lo: f64, hi: f64 },
}

impl ConstraintSet {
    pub fn boxed(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::InvalidArgument("box requires lower <= upper".into()));
        }
        Ok(ConstraintSet::Box { lower, upper })
    }

    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo <= hi) {
            return Err(Error::InvalidArgument(format!("empty interval [{lo}, {hi}]")));
        }
        Ok(ConstraintSet::Interval { lo, hi })
    }

    pub fn ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius >= 0.0) {
            return Err(Error::InvalidArgument("ball radius must be nonnegative".into()));
        }
        Ok(ConstraintSet::Ball { center, radius })
    }

    pub fn simplex(scale: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::InvalidArgument("simplex scale must be positive".into()));
        }
        Ok(ConstraintSet::Simplex { scale })
    }

    /// Dimension fixed by the set itself, if any.
    pub fn dim(&self) -> Option<usize> {
        match self {
            ConstraintSet::Box { lower, .. } => Some(lower.len()),
            ConstraintSet::Ball { center, .. } => Some(center.len()),
            _ => None,
        }
    }

    pub fn is_full_space(&self) -> bool {
        matches!(self, ConstraintSet::FullSpace)
    }

    pub fn is_bounded(&self) -> bool {
        match self {
            ConstraintSet::FullSpace => false,
            ConstraintSet::Box { lower, upper } => {
                lower.iter().chain(upper).all(|b| b.is_finite())
            }
            ConstraintSet::Interval { lo, hi } => lo.is_finite() && hi.is_finite(),
            ConstraintSet::Ball { .. } | ConstraintSet::Simplex { .. } => true,
        }
    }

    /// Largest per-coordinate bound pair for boxes and intervals, used by
    /// grid-based estimators. `None` for other kinds.
    pub fn coordinate_bounds(&self, dim: usize) -> Option<Vec<(f64, f64)>> {
        match self {
            ConstraintSet::Box { lower, upper } => {
                Some(lower.iter().copied().zip(upper.iter().copied()).collect())
            }
            ConstraintSet::Interval { lo, hi } => Some(vec![(*lo, *hi); dim]),
            _ => None,
        }
    }

    pub fn project(&self, v: &Vector) -> Result<Vector> {
        if let Some(d) = self.dim() {
            check_dim(d, v.len())?;
        }
        Ok(match self {
            ConstraintSet::FullSpace => v.clone(),
            ConstraintSet::Box { lower, upper } => Vector::from_iterator(
                v.len(),
                v.iter().enumerate().map(|(i, &c)| c.clamp(lower[i], upper[i])),
            ),
            ConstraintSet::Interval { lo, hi } => v.map(|c| c.clamp(*lo, *hi)),
            ConstraintSet::Ball { center, radius } => {
                let c = Vector::from_column_slice(center);
                let offset = v - &c;
                let norm = offset.norm();
                if norm <= *radius {
                    v.clone()
                } else {
                    c + offset * (*radius / norm)
                }
            }
            ConstraintSet::Simplex { scale } => project_simplex(v, *scale),
        })
    }

    /// Membership test with absolute slack `tol`.
    pub fn contains(&self, v: &Vector, tol: f64) -> bool {
        if let Some(d) = self.dim() {
            if d != v.len() {
                return false;
            }
        }
        match self {
            ConstraintSet::FullSpace => true,
            ConstraintSet::Box { lower, upper } => v
                .iter()
                .enumerate()
                .all(|(i, &c)| c >= lower[i] - tol && c <= upper[i] + tol),
            ConstraintSet::Interval { lo, hi } => v.iter().all(|&c| c >= lo - tol && c <= hi + tol),
            ConstraintSet::Ball { center, radius } => {
                (v - Vector::from_column_slice(center)).norm() <= radius + tol
            }
            ConstraintSet::Simplex { scale } => {
                v.iter().all(|&c| c >= -tol) && (v.sum() - scale).abs() <= tol * v.len().max(1) as f64
            }
        }
    }
}

/// Sort-and-threshold projection onto `{v >= 0, sum v = scale}`.
fn project_simplex(v: &Vector, scale: f64) -> Vector {
    let n = v.len();
    if n == 0 {
        return v.clone();
    }
    let mut sorted: Vec<f64> = v.iter().copied().collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &s) in sorted.iter().enumerate() {
        cumulative += s;
        let candidate = (cumulative - scale) / (j as f64 + 1.0);
        if s - candidate > 0.0 {
            theta = candidate;
        }
    }
    v.map(|c| (c - theta).max(0.0))
}
