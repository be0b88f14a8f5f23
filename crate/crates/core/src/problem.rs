//! Bilevel problem description: oracles, feasible sets and known constants.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::constraint::ConstraintSet;
use crate::error::{check_dim, Error, Result};
use crate::Vector;

pub type ScalarFn = Arc<dyn Fn(&Vector, &Vector) -> f64 + Send + Sync>;
/// Full gradient in `(x, y)`, stacked as a vector of length `dx + dy`.
pub type GradFn = Arc<dyn Fn(&Vector, &Vector) -> Vector + Send + Sync>;
/// Second-order product `(x, y, direction) -> vector`.
pub type ProductFn = Arc<dyn Fn(&Vector, &Vector, &Vector) -> Vector + Send + Sync>;
pub type SolutionFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;
pub type ValueFn = Arc<dyn Fn(&Vector) -> f64 + Send + Sync>;
/// Stochastic gradient `(x, y, sample) -> unbiased estimate`. The same
/// `sample` id must select the same random sample at every evaluation point.
pub type SampleGradFn = Arc<dyn Fn(&Vector, &Vector, u64) -> Vector + Send + Sync>;

/// Problem constants used by step-size rules, schedules and bound monitors.
/// `None` means unknown.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessConstants {
    /// Lipschitz constant of `f(x, ·)`.
    pub upper_lipschitz: Option<f64>,
    /// Smoothness of `f` in `(x, y)`.
    pub l_f: Option<f64>,
    /// Smoothness of `g` in `(x, y)`.
    pub l_g: Option<f64>,
    /// Smoothness of `∇_y g` in `(x, y)`.
    pub l_g2: Option<f64>,
    /// PL modulus: `‖∇_y g‖² >= (g - v) / mu` (quadratic growth for
    /// constrained lower levels).
    pub mu: Option<f64>,
    /// Proximal-error-bound modulus.
    pub mu_bar: Option<f64>,
    /// Squared-distance-bound modulus of the value gap:
    /// `rho * (g - v) >= dist²(y, S(x))`.
    pub rho: Option<f64>,
    /// Lower bound on the singular values of `∇_yy g` away from `S(x)`.
    pub sigma: Option<f64>,
    /// Smoothness of the value function `v`.
    pub l_v: Option<f64>,
    /// Names of constants that were estimated numerically rather than derived.
    #[serde(default)]
    pub estimated: Vec<String>,
}

impl SmoothnessConstants {
    pub fn validate(&self) -> Result<()> {
        let lipschitz = [
            ("upper_lipschitz", self.upper_lipschitz),
            ("l_f", self.l_f),
            ("l_g2", self.l_g2),
            ("l_v", self.l_v),
        ];
        for (name, value) in lipschitz {
            if let Some(v) = value {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::InvalidArgument(format!("{name} must be finite and >= 0")));
                }
            }
        }
        let moduli = [
            ("l_g", self.l_g),
            ("mu", self.mu),
            ("mu_bar", self.mu_bar),
            ("rho", self.rho),
            ("sigma", self.sigma),
        ];
        for (name, value) in moduli {
            if let Some(v) = value {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::InvalidArgument(format!("{name} must be finite and > 0")));
                }
            }
        }
        Ok(())
    }

    pub fn require(value: Option<f64>, name: &str) -> Result<f64> {
        value.ok_or_else(|| Error::InvalidConfig(format!("problem constant `{name}` is required")))
    }

    pub fn is_estimated(&self, name: &str) -> bool {
        self.estimated.iter().any(|n| n == name)
    }
}

/// A bilevel problem `min f(x,y) s.t. x ∈ C, y ∈ argmin_{y' ∈ U} g(x,y')`.
///
/// Oracles must be pure: a single `ProblemSpec` is shared read-only across
/// concurrent solves.
#[derive(Clone)]
pub struct ProblemSpec {
    name: String,
    dx: usize,
    dy: usize,
    f: ScalarFn,
    f_grad: GradFn,
    g: ScalarFn,
    g_grad: GradFn,
    g_hvp_yy: Option<ProductFn>,
    g_hvp_xy: Option<ProductFn>,
    g_hvp_yx: Option<ProductFn>,
    upper_set: ConstraintSet,
    lower_set: ConstraintSet,
    lower_solution: Option<SolutionFn>,
    lower_value: Option<ValueFn>,
    f_grad_sample: Option<SampleGradFn>,
    g_grad_sample: Option<SampleGradFn>,
    constants: SmoothnessConstants,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("dx", &self.dx)
            .field("dy", &self.dy)
            .field("upper_set", &self.upper_set)
            .field("lower_set", &self.lower_set)
            .field("has_hvp", &self.has_hvp())
            .field("has_jacobian", &self.has_jacobian())
            .field("has_lower_solution", &self.lower_solution.is_some())
            .field("has_lower_value", &self.lower_value.is_some())
            .field("constants", &self.constants)
            .finish()
    }
}

impl ProblemSpec {
    pub fn builder(name: impl Into<String>, dx: usize, dy: usize) -> ProblemBuilder {
        ProblemBuilder {
            name: name.into(),
            dx,
            dy,
            upper: None,
            lower: None,
            g_hvp_yy: None,
            g_hvp_xy: None,
            g_hvp_yx: None,
            upper_set: ConstraintSet::FullSpace,
            lower_set: ConstraintSet::FullSpace,
            lower_solution: None,
            lower_value: None,
            f_grad_sample: None,
            g_grad_sample: None,
            constants: SmoothnessConstants::default(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn dx(&self) -> usize {
        self.dx
    }
    pub fn dy(&self) -> usize {
        self.dy
    }
    pub fn upper_set(&self) -> &ConstraintSet {
        &self.upper_set
    }
    pub fn lower_set(&self) -> &ConstraintSet {
        &self.lower_set
    }
    pub fn constants(&self) -> &SmoothnessConstants {
        &self.constants
    }

    /// Replace the declared constants, e.g. to run with user-supplied values.
    pub fn with_constants(mut self, constants: SmoothnessConstants) -> Result<Self> {
        constants.validate()?;
        self.constants = constants;
        Ok(self)
    }

    /// The same problem with the three Hessian-product oracles removed.
    pub fn without_hessian_products(mut self) -> Self {
        self.g_hvp_yy = None;
        self.g_hvp_xy = None;
        self.g_hvp_yx = None;
        self
    }

    pub fn lower_unconstrained(&self) -> bool {
        self.lower_set.is_full_space()
    }

    fn check_point(&self, x: &Vector, y: &Vector) -> Result<()> {
        check_dim(self.dx, x.len())?;
        check_dim(self.dy, y.len())
    }

    pub fn f(&self, x: &Vector, y: &Vector) -> Result<f64> {
        self.check_point(x, y)?;
        Ok((self.f)(x, y))
    }

    pub fn f_grad(&self, x: &Vector, y: &Vector) -> Result<Vector> {
        self.check_point(x, y)?;
        Ok((self.f_grad)(x, y))
    }

    pub fn g(&self, x: &Vector, y: &Vector) -> Result<f64> {
        self.check_point(x, y)?;
        Ok((self.g)(x, y))
    }

    pub fn g_grad(&self, x: &Vector, y: &Vector) -> Result<Vector> {
        self.check_point(x, y)?;
        Ok((self.g_grad)(x, y))
    }

    pub fn g_grad_x(&self, x: &Vector, y: &Vector) -> Result<Vector> {
        Ok(self.g_grad(x, y)?.rows(0, self.dx).into_owned())
    }

    pub fn g_grad_y(&self, x: &Vector, y: &Vector) -> Result<Vector> {
        Ok(self.g_grad(x, y)?.rows(self.dx, self.dy).into_owned())
    }

    pub fn has_hvp(&self) -> bool {
        self.g_hvp_yy.is_some() && self.g_hvp_xy.is_some()
    }

    /// Both blocks of the Jacobian of `∇_y g` and its adjoint are available.
    pub fn has_jacobian(&self) -> bool {
        self.has_hvp() && self.g_hvp_yx.is_some()
    }

    /// `∇_yy g(x,y) · v` for `v ∈ R^dy`.
    pub fn g_hvp_yy(&self, x: &Vector, y: &Vector, v: &Vector) -> Result<Vector> {
        self.check_point(x, y)?;
        check_dim(self.dy, v.len())?;
        let op = self.g_hvp_yy.as_ref().ok_or(Error::MissingOracle("g_hvp_yy"))?;
        Ok(op(x, y, v))
    }

    /// `∇_xy g(x,y) · v` for `v ∈ R^dy`, i.e. the x-gradient of `⟨∇_y g, v⟩`.
    pub fn g_hvp_xy(&self, x: &Vector, y: &Vector, v: &Vector) -> Result<Vector> {
        self.check_point(x, y)?;
        check_dim(self.dy, v.len())?;
        let op = self.g_hvp_xy.as_ref().ok_or(Error::MissingOracle("g_hvp_xy"))?;
        Ok(op(x, y, v))
    }

    /// `∇_yx g(x,y) · u` for `u ∈ R^dx`: directional derivative of `∇_y g` along x.
    pub fn g_hvp_yx(&self, x: &Vector, y: &Vector, u: &Vector) -> Result<Vector> {
        self.check_point(x, y)?;
        check_dim(self.dx, u.len())?;
        let op = self.g_hvp_yx.as_ref().ok_or(Error::MissingOracle("g_hvp_yx"))?;
        Ok(op(x, y, u))
    }

    pub fn has_lower_solution(&self) -> bool {
        self.lower_solution.is_some()
    }

    /// One element of the lower-level solution set `S(x)`.
    pub fn lower_solution(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dx, x.len())?;
        let op = self
            .lower_solution
            .as_ref()
            .ok_or(Error::MissingOracle("analytic_lower_solution"))?;
        Ok(op(x))
    }

    /// Analytic lower-level value `v(x)`, when known.
    pub fn lower_value(&self, x: &Vector) -> Option<f64> {
        self.lower_value.as_ref().map(|v| v(x))
    }

    pub fn has_lower_value(&self) -> bool {
        self.lower_value.is_some()
    }

    pub fn has_stochastic_oracles(&self) -> bool {
        self.g_grad_sample.is_some()
    }

    /// Sampled `∇f`; falls back to the exact gradient when no sampler is set.
    pub fn f_grad_sample(&self, x: &Vector, y: &Vector, sample: u64) -> Result<Vector> {
        self.check_point(x, y)?;
        Ok(match &self.f_grad_sample {
            Some(op) => op(x, y, sample),
            None => (self.f_grad)(x, y),
        })
    }

    pub fn g_grad_sample(&self, x: &Vector, y: &Vector, sample: u64) -> Result<Vector> {
        self.check_point(x, y)?;
        let op = self.g_grad_sample.as_ref().ok_or(Error::MissingOracle("g_grad_sample"))?;
        Ok(op(x, y, sample))
    }
}

pub struct ProblemBuilder {
    name: String,
    dx: usize,
    dy: usize,
    upper: Option<(ScalarFn, GradFn)>,
    lower: Option<(ScalarFn, GradFn)>,
    g_hvp_yy: Option<ProductFn>,
    g_hvp_xy: Option<ProductFn>,
    g_hvp_yx: Option<ProductFn>,
    upper_set: ConstraintSet,
    lower_set: ConstraintSet,
    lower_solution: Option<SolutionFn>,
    lower_value: Option<ValueFn>,
    f_grad_sample: Option<SampleGradFn>,
    g_grad_sample: Option<SampleGradFn>,
    constants: SmoothnessConstants,
}

impl ProblemBuilder {
    pub fn upper<F, G>(mut self, f: F, grad: G) -> Self
    where
        F: Fn(&Vector, &Vector) -> f64 + Send + Sync + 'static,
        G: Fn(&Vector, &Vector) -> Vector + Send + Sync + 'static,
    {
        self.upper = Some((Arc::new(f), Arc::new(grad)));
        self
    }

    pub fn lower<F, G>(mut self, g: F, grad: G) -> Self
    where
        F: Fn(&Vector, &Vector) -> f64 + Send + Sync + 'static,
        G: Fn(&Vector, &Vector) -> Vector + Send + Sync + 'static,
    {
        self.lower = Some((Arc::new(g), Arc::new(grad)));
        self
    }

    /// Second-order products of `g`: `∇_yy g·v`, `∇_xy g·v` and `∇_yx g·u`.
    pub fn hessian_products<A, B, C>(mut self, yy: A, xy: B, yx: C) -> Self
    where
        A: Fn(&Vector, &Vector, &Vector) -> Vector + Send + Sync + 'static,
        B: Fn(&Vector, &Vector, &Vector) -> Vector + Send + Sync + 'static,
        C: Fn(&Vector, &Vector, &Vector) -> Vector + Send + Sync + 'static,
    {
        self.g_hvp_yy = Some(Arc::new(yy));
        self.g_hvp_xy = Some(Arc::new(xy));
        self.g_hvp_yx = Some(Arc::new(yx));
        self
    }

    pub fn upper_set(mut self, set: ConstraintSet) -> Self {
        self.upper_set = set;
        self
    }

    pub fn lower_set(mut self, set: ConstraintSet) -> Self {
        self.lower_set = set;
        self
    }

    pub fn lower_solution<S>(mut self, s: S) -> Self
    where
        S: Fn(&Vector) -> Vector + Send + Sync + 'static,
    {
        self.lower_solution = Some(Arc::new(s));
        self
    }

    pub fn lower_value<V>(mut self, v: V) -> Self
    where
        V: Fn(&Vector) -> f64 + Send + Sync + 'static,
    {
        self.lower_value = Some(Arc::new(v));
        self
    }

    pub fn stochastic<A, B>(mut self, f_sample: Option<A>, g_sample: B) -> Self
    where
        A: Fn(&Vector, &Vector, u64) -> Vector + Send + Sync + 'static,
        B: Fn(&Vector, &Vector, u64) -> Vector + Send + Sync + 'static,
    {
        self.f_grad_sample = f_sample.map(|a| Arc::new(a) as SampleGradFn);
        self.g_grad_sample = Some(Arc::new(g_sample));
        self
    }

    pub fn constants(mut self, constants: SmoothnessConstants) -> Self {
        self.constants = constants;
        self
    }

    pub fn build(self) -> Result<ProblemSpec> {
        let (f, f_grad) = self.upper.ok_or(Error::MissingOracle("upper objective"))?;
        let (g, g_grad) = self.lower.ok_or(Error::MissingOracle("lower objective"))?;
        if self.dy == 0 {
            return Err(Error::InvalidArgument("lower-level dimension must be positive".into()));
        }
        for set in [&self.upper_set, &self.lower_set] {
            if let Some(d) = set.dim() {
                let expected = if std::ptr::eq(set, &self.upper_set) { self.dx } else { self.dy };
                check_dim(expected, d)?;
            }
        }
        self.constants.validate()?;
        Ok(ProblemSpec {
            name: self.name,
            dx: self.dx,
            dy: self.dy,
            f,
            f_grad,
            g,
            g_grad,
            g_hvp_yy: self.g_hvp_yy,
            g_hvp_xy: self.g_hvp_xy,
            g_hvp_yx: self.g_hvp_yx,
            upper_set: self.upper_set,
            lower_set: self.lower_set,
            lower_solution: self.lower_solution,
            lower_value: self.lower_value,
            f_grad_sample: self.f_grad_sample,
            g_grad_sample: self.g_grad_sample,
            constants: self.constants,
        })
    }
}
