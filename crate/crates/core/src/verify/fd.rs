use rand::Rng;

use crate::error::{Error, Result};
use crate::problems::CatalogEntry;
use crate::{concat, split, Vector};

use super::{sample_point, uniform, CheckReport};

/// Central-difference step used by every derivative check.
pub const FD_STEP: f64 = 1e-5;
/// Relative residual `‖fd - analytic‖ / (1 + ‖analytic‖)` accepted by the checks.
pub const FD_TOLERANCE: f64 = 1e-5;

/// Central differences `(f(z + h e_i) - f(z - h e_i)) / 2h` per coordinate.
pub fn finite_difference_grad<F>(f: F, z: &Vector, h: f64) -> Result<Vector>
where
    F: Fn(&Vector) -> f64,
{
    if !(h > 0.0) {
        return Err(Error::InvalidArgument("finite-difference step must be > 0".into()));
    }
    let mut grad = Vector::zeros(z.len());
    let mut probe = z.clone();
    for i in 0..z.len() {
        probe[i] = z[i] + h;
        let up = f(&probe);
        probe[i] = z[i] - h;
        let down = f(&probe);
        probe[i] = z[i];
        grad[i] = (up - down) / (2.0 * h);
    }
    Ok(grad)
}

fn relative(fd: &Vector, analytic: &Vector) -> f64 {
    (fd - analytic).norm() / (1.0 + analytic.norm())
}

/// Finite differences of `f` and `g` against their gradient oracles.
pub fn check_gradients<R: Rng + ?Sized>(entry: &CatalogEntry, samples: usize, rng: &mut R) -> Result<CheckReport> {
    let p = &entry.problem;
    let dx = p.dx();
    let mut residuals = Vec::with_capacity(2 * samples);
    for s in 0..samples {
        let (x, y) = sample_point(entry, rng);
        let z = concat(&x, &y);
        let at = |z: &Vector| split(z, dx);
        let fd_f = finite_difference_grad(|z| { let (x, y) = at(z); p.f(&x, &y).unwrap_or(f64::NAN) }, &z, FD_STEP)?;
        let fd_g = finite_difference_grad(|z| { let (x, y) = at(z); p.g(&x, &y).unwrap_or(f64::NAN) }, &z, FD_STEP)?;
        residuals.push((relative(&fd_f, &p.f_grad(&x, &y)?), format!("grad f, sample {s}")));
        residuals.push((relative(&fd_g, &p.g_grad(&x, &y)?), format!("grad g, sample {s}")));
    }
    Ok(CheckReport::from_residuals("gradients", FD_TOLERANCE, residuals))
}

fn random_unit<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vector {
    let v = Vector::from_fn(n, |_, _| uniform(rng, (-1.0, 1.0)));
    let norm = v.norm();
    if norm > 0.0 { v / norm } else { Vector::from_element(n, 1.0 / (n as f64).sqrt()) }
}

/// Directional finite differences of `∇g` against the three Hessian products.
pub fn check_hvps<R: Rng + ?Sized>(entry: &CatalogEntry, samples: usize, rng: &mut R) -> Result<CheckReport> {
    let p = &entry.problem;
    let (dx, dy) = (p.dx(), p.dy());
    let h = FD_STEP;
    let mut residuals = Vec::with_capacity(3 * samples);
    for s in 0..samples {
        let (x, y) = sample_point(entry, rng);
        let v = random_unit(rng, dy);
        let (yp, ym) = (&y + &v * h, &y - &v * h);
        let fd_yy = (p.g_grad_y(&x, &yp)? - p.g_grad_y(&x, &ym)?) / (2.0 * h);
        residuals.push((relative(&fd_yy, &p.g_hvp_yy(&x, &y, &v)?), format!("hvp yy, sample {s}")));
        if dx > 0 {
            let fd_xy = (p.g_grad_x(&x, &yp)? - p.g_grad_x(&x, &ym)?) / (2.0 * h);
            residuals.push((relative(&fd_xy, &p.g_hvp_xy(&x, &y, &v)?), format!("hvp xy, sample {s}")));
            let u = random_unit(rng, dx);
            let fd_yx = (p.g_grad_y(&(&x + &u * h), &y)? - p.g_grad_y(&(&x - &u * h), &y)?) / (2.0 * h);
            residuals.push((relative(&fd_yx, &p.g_hvp_yx(&x, &y, &u)?), format!("hvp yx, sample {s}")));
        }
    }
    Ok(CheckReport::from_residuals("hvps", FD_TOLERANCE, residuals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalty::{penalized_objective, PenaltyKind};
    use crate::problems;

    #[test]
    fn half_norm_squared() {
        let z = Vector::from_vec(vec![1.0, 2.0]);
        let g = finite_difference_grad(|z| 0.5 * z.norm_squared(), &z, 1e-5).unwrap();
        assert!((g - &z).norm() < 1e-8);
    }

    #[test]
    fn constant_function() {
        let g = finite_difference_grad(|_| 4.0, &Vector::from_vec(vec![0.3, -2.0, 7.0]), 1e-5).unwrap();
        assert_eq!(g, Vector::zeros(3));
        assert!(finite_difference_grad(|_| 4.0, &Vector::zeros(1), 0.0).is_err());
    }

    #[test]
    fn quadratic_penalized_objective_slope() {
        let p = problems::quadratic();
        let fd = finite_difference_grad(
            |z| penalized_objective(&p, PenaltyKind::ValueGap, 10.0, &z.rows(0, 1).into_owned(), &z.rows(1, 1).into_owned(), None).unwrap(),
            &Vector::from_vec(vec![0.0, 0.1]),
            1e-5,
        )
        .unwrap();
        assert!((fd[1] - 3.0).abs() < 1e-6);
    }
}
