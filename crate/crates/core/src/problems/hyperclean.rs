//! Synthetic data hyper-cleaning.
//!
//! Training points `(a_i, b_i)` come from a linear teacher; a fraction of
//! labels is corrupted. The upper variable `x ∈ ℝ^n` weights each training
//! sample by `σ(x_i)`:
//!
//! * lower: `g(x, w) = (1/n) Σ σ(x_i) ℓ(w; a_i, b_i) + (λ/2)‖w‖²`,
//! * upper: `f(x, w) = (1/m) Σ ℓ(w; a'_j, b'_j)` on a clean validation set,
//!
//! with `ℓ(w; a, b) = ln(1 + e^{-b aᵀw})`. The lower level is λ-strongly
//! convex in `w`, hence PL with μ = 1/(2λ) and quadratic growth with ρ = 2/λ.
//!
//! Corruption flips the label. Redrawing a binary label uniformly would
//! leave half of the "corrupted" samples clean.

use std::sync::Arc;

use rand::seq::index::sample as sample_indices;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::problem::{ProblemSpec, SmoothnessConstants};
use crate::{rng, Vector};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HypercleanParams {
    pub n_train: usize,
    pub n_val: usize,
    pub dim: usize,
    pub noise_rate: f64,
    pub lambda_reg: f64,
    /// Norm of the teacher vector; larger means cleaner margins.
    pub teacher_norm: f64,
    pub seed: u64,
}

impl Default for HypercleanParams {
    fn default() -> Self {
        HypercleanParams {
            n_train: 200,
            n_val: 200,
            dim: 5,
            noise_rate: 0.3,
            lambda_reg: 0.01,
            teacher_norm: 3.0,
            seed: 0,
        }
    }
}

/// Generated data shared by all oracles of one instance.
#[derive(Debug, Clone)]
pub struct HypercleanData {
    pub train_a: Vec<Vector>,
    pub train_b: Vec<f64>,
    pub val_a: Vec<Vector>,
    pub val_b: Vec<f64>,
    pub corrupted: Vec<bool>,
    pub lambda: f64,
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^{-m})`, stable for large `|m|`.
fn logistic_loss(margin: f64) -> f64 {
    if margin > 0.0 {
        (-margin).exp().ln_1p()
    } else {
        -margin + margin.exp().ln_1p()
    }
}

/// splitmix64 finalizer, maps sample ids to indices.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl HypercleanData {
    pub fn n_train(&self) -> usize {
        self.train_b.len()
    }

    pub fn n_val(&self) -> usize {
        self.val_b.len()
    }

    fn train_term(&self, i: usize, w: &Vector) -> (f64, Vector) {
        let m = self.train_b[i] * self.train_a[i].dot(w);
        let grad = &self.train_a[i] * (-self.train_b[i] * sigmoid(-m));
        (logistic_loss(m), grad)
    }

    pub fn lower_value(&self, x: &Vector, w: &Vector) -> f64 {
        let n = self.n_train() as f64;
        let data: f64 = (0..self.n_train())
            .map(|i| sigmoid(x[i]) * logistic_loss(self.train_b[i] * self.train_a[i].dot(w)))
            .sum();
        data / n + 0.5 * self.lambda * w.norm_squared()
    }

    pub fn lower_grad(&self, x: &Vector, w: &Vector) -> (Vector, Vector) {
        let n = self.n_train() as f64;
        let mut gx = Vector::zeros(self.n_train());
        let mut gw = w * self.lambda;
        for i in 0..self.n_train() {
            let (loss, grad) = self.train_term(i, w);
            let s = sigmoid(x[i]);
            gx[i] = s * (1.0 - s) * loss / n;
            gw.axpy(s / n, &grad, 1.0);
        }
        (gx, gw)
    }

    pub fn lower_hvp_ww(&self, x: &Vector, w: &Vector, v: &Vector) -> Vector {
        let n = self.n_train() as f64;
        let mut out = v * self.lambda;
        for i in 0..self.n_train() {
            let a = &self.train_a[i];
            let p = sigmoid(self.train_b[i] * a.dot(w));
            out.axpy(sigmoid(x[i]) * p * (1.0 - p) * a.dot(v) / n, a, 1.0);
        }
        out
    }

    /// `∇_xw g · v`, length `n_train`.
    pub fn lower_hvp_xw(&self, x: &Vector, w: &Vector, v: &Vector) -> Vector {
        let n = self.n_train() as f64;
        Vector::from_fn(self.n_train(), |i, _| {
            let s = sigmoid(x[i]);
            let (_, grad) = self.train_term(i, w);
            s * (1.0 - s) * grad.dot(v) / n
        })
    }

    /// `∇_wx g · u`, length `dim`.
    pub fn lower_hvp_wx(&self, x: &Vector, w: &Vector, u: &Vector) -> Vector {
        let n = self.n_train() as f64;
        let mut out = Vector::zeros(w.len());
        for i in 0..self.n_train() {
            let s = sigmoid(x[i]);
            let (_, grad) = self.train_term(i, w);
            out.axpy(s * (1.0 - s) * u[i] / n, &grad, 1.0);
        }
        out
    }

    pub fn val_loss(&self, w: &Vector) -> f64 {
        let m = self.n_val() as f64;
        (0..self.n_val()).map(|j| logistic_loss(self.val_b[j] * self.val_a[j].dot(w))).sum::<f64>() / m
    }

    pub fn val_grad(&self, w: &Vector) -> Vector {
        let m = self.n_val() as f64;
        let mut out = Vector::zeros(w.len());
        for j in 0..self.n_val() {
            let mj = self.val_b[j] * self.val_a[j].dot(w);
            out.axpy(-self.val_b[j] * sigmoid(-mj) / m, &self.val_a[j], 1.0);
        }
        out
    }

    pub fn val_accuracy(&self, w: &Vector) -> f64 {
        let hits = (0..self.n_val()).filter(|&j| self.val_b[j] * self.val_a[j].dot(w) > 0.0).count();
        hits as f64 / self.n_val() as f64
    }

    /// Minimizer of `g(x, ·)` by damped Newton; the Hessian is `dim × dim`
    /// and positive definite.
    pub fn solve_lower(&self, x: &Vector) -> Vector {
        let d = self.train_a[0].len();
        let mut w = Vector::zeros(d);
        for _ in 0..100 {
            let (_, grad) = self.lower_grad(x, &w);
            if grad.norm() < 1e-14 {
                break;
            }
            let hess = nalgebra::DMatrix::from_fn(d, d, |r, c| {
                let mut e = Vector::zeros(d);
                e[c] = 1.0;
                self.lower_hvp_ww(x, &w, &e)[r]
            });
            let step = hess.cholesky().expect("lower Hessian is positive definite").solve(&grad);
            let g0 = self.lower_value(x, &w);
            let mut t = 1.0;
            while t > 1e-12 && self.lower_value(x, &(&w - &step * t)) > g0 - 0.25 * t * grad.dot(&step) {
                t *= 0.5;
            }
            w -= step * t;
        }
        w
    }

    /// Mean `σ(x_i)` over corrupted and clean samples.
    pub fn mean_weights(&self, x: &Vector) -> (f64, f64) {
        let (mut bad, mut nb, mut good, mut ng) = (0.0, 0usize, 0.0, 0usize);
        for i in 0..self.n_train() {
            if self.corrupted[i] {
                bad += sigmoid(x[i]);
                nb += 1;
            } else {
                good += sigmoid(x[i]);
                ng += 1;
            }
        }
        (bad / nb.max(1) as f64, good / ng.max(1) as f64)
    }

    /// Training-sample index selected by a stochastic-oracle sample id.
    pub fn train_index(&self, sample: u64) -> usize {
        (mix(sample) % self.n_train() as u64) as usize
    }

    pub fn val_index(&self, sample: u64) -> usize {
        (mix(sample ^ 0x5555_5555_5555_5555) % self.n_val() as u64) as usize
    }
}

/// A built hyper-cleaning problem together with its data.
#[derive(Debug, Clone)]
pub struct HypercleanInstance {
    pub problem: ProblemSpec,
    pub data: Arc<HypercleanData>,
    pub params: HypercleanParams,
}

pub fn generate_data(params: &HypercleanParams) -> Result<HypercleanData> {
    if params.n_train == 0 || params.n_val == 0 || params.dim == 0 {
        return Err(Error::InvalidArgument("hyperclean sizes must be positive".into()));
    }
    if !(0.0..=1.0).contains(&params.noise_rate) {
        return Err(Error::InvalidArgument("noise_rate must lie in [0, 1]".into()));
    }
    if !(params.lambda_reg > 0.0 && params.lambda_reg.is_finite()) {
        return Err(Error::InvalidArgument("lambda_reg must be > 0".into()));
    }
    let mut rng = rng::substream(params.seed, rng::DATA, 0);
    let gauss = |rng: &mut rand_chacha::ChaCha8Rng, d: usize| {
        Vector::from_fn(d, |_, _| StandardNormal.sample(rng))
    };
    let teacher = {
        let t = gauss(&mut rng, params.dim);
        t.normalize() * params.teacher_norm
    };
    let label = |a: &Vector| if a.dot(&teacher) >= 0.0 { 1.0 } else { -1.0 };
    let train_a: Vec<Vector> = (0..params.n_train).map(|_| gauss(&mut rng, params.dim)).collect();
    let mut train_b: Vec<f64> = train_a.iter().map(label).collect();
    let n_bad = (params.noise_rate * params.n_train as f64).round() as usize;
    let mut corrupted = vec![false; params.n_train];
    for i in sample_indices(&mut rng, params.n_train, n_bad) {
        corrupted[i] = true;
        train_b[i] = -train_b[i];
    }
    let val_a: Vec<Vector> = (0..params.n_val).map(|_| gauss(&mut rng, params.dim)).collect();
    let val_b = val_a.iter().map(label).collect();
    Ok(HypercleanData { train_a, train_b, val_a, val_b, corrupted, lambda: params.lambda_reg })
}

pub fn hyperclean_instance(params: &HypercleanParams) -> Result<HypercleanInstance> {
    let data = Arc::new(generate_data(params)?);
    let (n, d) = (params.n_train, params.dim);
    // y-block smoothness: (1/4n) Σ‖a_i‖² + λ bounds ∇_ww g for σ(x) <= 1.
    let l_gy = data.train_a.iter().map(|a| a.norm_squared()).sum::<f64>() / (4.0 * n as f64) + params.lambda_reg;
    let cat = |gx: Vector, gw: Vector| crate::concat(&gx, &gw);

    let dd = || data.clone();
    let problem = ProblemSpec::builder("hyperclean", n, d)
        .upper(
            {
                let data = dd();
                move |_, w| data.val_loss(w)
            },
            {
                let data = dd();
                move |_, w| cat(Vector::zeros(n), data.val_grad(w))
            },
        )
        .lower(
            {
                let data = dd();
                move |x, w| data.lower_value(x, w)
            },
            {
                let data = dd();
                move |x, w| {
                    let (gx, gw) = data.lower_grad(x, w);
                    cat(gx, gw)
                }
            },
        )
        .hessian_products(
            {
                let data = dd();
                move |x, w, v| data.lower_hvp_ww(x, w, v)
            },
            {
                let data = dd();
                move |x, w, v| data.lower_hvp_xw(x, w, v)
            },
            {
                let data = dd();
                move |x, w, u| data.lower_hvp_wx(x, w, u)
            },
        )
        .stochastic(
            Some({
                let data = dd();
                move |_: &Vector, w: &Vector, s: u64| {
                    let j = data.val_index(s);
                    let mj = data.val_b[j] * data.val_a[j].dot(w);
                    cat(Vector::zeros(n), &data.val_a[j] * (-data.val_b[j] * sigmoid(-mj)))
                }
            }),
            {
                let data = dd();
                move |x: &Vector, w: &Vector, s: u64| {
                    // One training sample, scaled so the estimate is unbiased.
                    let i = data.train_index(s);
                    let (loss, grad) = data.train_term(i, w);
                    let sx = sigmoid(x[i]);
                    let mut gx = Vector::zeros(n);
                    gx[i] = sx * (1.0 - sx) * loss;
                    cat(gx, grad * sx + w * data.lambda)
                }
            },
        )
        .constants(SmoothnessConstants {
            upper_lipschitz: None,
            l_f: Some(data.val_a.iter().map(|a| a.norm_squared()).sum::<f64>() / (4.0 * params.n_val as f64)),
            l_g: Some(l_gy),
            mu: Some(1.0 / (2.0 * params.lambda_reg)),
            rho: Some(2.0 / params.lambda_reg),
            estimated: vec!["l_g".into()],
            ..Default::default()
        })
        .build()?;
    Ok(HypercleanInstance { problem, data, params: params.clone() })
}

pub fn hyperclean_synthetic(params: &HypercleanParams) -> Result<ProblemSpec> {
    Ok(hyperclean_instance(params)?.problem)
}
