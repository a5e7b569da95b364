//! Shared-trunk policy/value network: two tanh layers of 64 units feeding a
//! policy head (one logit per action) and a scalar value head.
//!
//! Parameters are generic over the float type so gradient checks can run in
//! `f64`; training and checkpoints use `f32`.

use std::fmt::Debug;

use ndarray::{Array1, Array2, ArrayView2, Axis, LinalgScalar};
use num_traits::Float;
use rand::Rng;

use crate::rng::SplitMix64;

pub const HIDDEN: usize = 64;

/// Names of the parameter tensors, in checkpoint order.
pub const TENSOR_NAMES: [&str; 8] = ["w1", "b1", "w2", "b2", "policy_w", "policy_b", "value_w", "value_b"];

pub trait Scalar: Float + LinalgScalar + Debug + Send + Sync + 'static {}
impl Scalar for f32 {}
impl Scalar for f64 {}

/// Network weights. Matrices are stored input-major (`in x out`), so a layer
/// computes `x . W + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParams<T: Scalar = f32> {
    pub obs_dim: usize,
    pub n_actions: usize,
    pub w1: Array2<T>,
    pub b1: Array1<T>,
    pub w2: Array2<T>,
    pub b2: Array1<T>,
    pub policy_w: Array2<T>,
    pub policy_b: Array1<T>,
    pub value_w: Array2<T>,
    pub value_b: Array1<T>,
}

/// Intermediate activations of a batched forward pass.
#[derive(Debug, Clone)]
pub struct Forward<T: Scalar> {
    pub h1: Array2<T>,
    pub h2: Array2<T>,
    pub logits: Array2<T>,
    pub values: Array1<T>,
}

fn cast<T: Scalar>(x: f64) -> T {
    T::from(x).expect("float conversion")
}

fn glorot<T: Scalar>(rows: usize, cols: usize, gain: f64, rng: &mut SplitMix64) -> Array2<T> {
    let limit = gain * (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| cast(rng.gen_range(-limit..limit)))
}

impl<T: Scalar> PolicyParams<T> {
    pub fn zeros(obs_dim: usize, n_actions: usize) -> Self {
        Self {
            obs_dim,
            n_actions,
            w1: Array2::zeros((obs_dim, HIDDEN)),
            b1: Array1::zeros(HIDDEN),
            w2: Array2::zeros((HIDDEN, HIDDEN)),
            b2: Array1::zeros(HIDDEN),
            policy_w: Array2::zeros((HIDDEN, n_actions)),
            policy_b: Array1::zeros(n_actions),
            value_w: Array2::zeros((HIDDEN, 1)),
            value_b: Array1::zeros(1),
        }
    }

    /// Glorot-uniform weights with zero biases; the policy head is scaled by
    /// 0.01 so the initial policy is close to uniform.
    pub fn init(obs_dim: usize, n_actions: usize, rng: &mut SplitMix64) -> Self {
        Self {
            w1: glorot(obs_dim, HIDDEN, 1.0, rng),
            w2: glorot(HIDDEN, HIDDEN, 1.0, rng),
            policy_w: glorot(HIDDEN, n_actions, 0.01, rng),
            value_w: glorot(HIDDEN, 1, 1.0, rng),
            ..Self::zeros(obs_dim, n_actions)
        }
    }

    pub fn tensors(&self) -> [&[T]; 8] {
        [
            self.w1.as_slice(),
            self.b1.as_slice(),
            self.w2.as_slice(),
            self.b2.as_slice(),
            self.policy_w.as_slice(),
            self.policy_b.as_slice(),
            self.value_w.as_slice(),
            self.value_b.as_slice(),
        ]
        .map(|s| s.expect("parameters are stored contiguously"))
    }

    pub fn tensors_mut(&mut self) -> [&mut [T]; 8] {
        [
            self.w1.as_slice_mut(),
            self.b1.as_slice_mut(),
            self.w2.as_slice_mut(),
            self.b2.as_slice_mut(),
            self.policy_w.as_slice_mut(),
            self.policy_b.as_slice_mut(),
            self.value_w.as_slice_mut(),
            self.value_b.as_slice_mut(),
        ]
        .map(|s| s.expect("parameters are stored contiguously"))
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(T) -> U) -> PolicyParams<U> {
        PolicyParams {
            obs_dim: self.obs_dim,
            n_actions: self.n_actions,
            w1: self.w1.mapv(&f),
            b1: self.b1.mapv(&f),
            w2: self.w2.mapv(&f),
            b2: self.b2.mapv(&f),
            policy_w: self.policy_w.mapv(&f),
            policy_b: self.policy_b.mapv(&f),
            value_w: self.value_w.mapv(&f),
            value_b: self.value_b.mapv(&f),
        }
    }

    /// Single-observation forward pass returning `(logits, value)`.
    pub fn forward(&self, obs: &[T]) -> (Vec<T>, T) {
        assert_eq!(obs.len(), self.obs_dim, "observation length does not match the network");
        let h1 = dense_tanh(obs, &self.w1, &self.b1);
        let h2 = dense_tanh(&h1, &self.w2, &self.b2);
        let logits = dense(&h2, &self.policy_w, &self.policy_b);
        let value = dense(&h2, &self.value_w, &self.value_b)[0];
        (logits, value)
    }

    /// Batched forward pass; rows of `x` are observations.
    pub fn forward_batch(&self, x: ArrayView2<T>) -> Forward<T> {
        assert_eq!(x.ncols(), self.obs_dim, "observation length does not match the network");
        let mut h1 = x.dot(&self.w1) + &self.b1;
        h1.mapv_inplace(T::tanh);
        let mut h2 = h1.dot(&self.w2) + &self.b2;
        h2.mapv_inplace(T::tanh);
        let logits = h2.dot(&self.policy_w) + &self.policy_b;
        let values = (h2.dot(&self.value_w) + &self.value_b).index_axis_move(Axis(1), 0);
        Forward { h1, h2, logits, values }
    }

    /// Gradients for a batch given the loss derivatives with respect to the
    /// logits and the values. The result has the same shape as `self`.
    pub fn backward(&self, x: ArrayView2<T>, fwd: &Forward<T>, d_logits: &Array2<T>, d_values: &Array1<T>) -> Self {
        let one = T::one();
        let d_values_col = d_values.view().insert_axis(Axis(1));
        let mut d_h2 = d_logits.dot(&self.policy_w.t()) + d_values_col.dot(&self.value_w.t());
        d_h2.zip_mut_with(&fwd.h2, |g, &h| *g = *g * (one - h * h));
        let mut d_h1 = d_h2.dot(&self.w2.t());
        d_h1.zip_mut_with(&fwd.h1, |g, &h| *g = *g * (one - h * h));
        Self {
            obs_dim: self.obs_dim,
            n_actions: self.n_actions,
            w1: x.t().dot(&d_h1),
            b1: d_h1.sum_axis(Axis(0)),
            w2: fwd.h1.t().dot(&d_h2),
            b2: d_h2.sum_axis(Axis(0)),
            policy_w: fwd.h2.t().dot(d_logits),
            policy_b: d_logits.sum_axis(Axis(0)),
            value_w: fwd.h2.t().dot(&d_values_col),
            value_b: Array1::from_elem(1, d_values.sum()),
        }
    }
}

fn dense<T: Scalar>(x: &[T], w: &Array2<T>, b: &Array1<T>) -> Vec<T> {
    let mut out: Vec<T> = b.to_vec();
    let w = w.as_slice().expect("contiguous weights");
    let cols = out.len();
    for (i, &xi) in x.iter().enumerate() {
        if xi == T::zero() {
            continue;
        }
        let row = &w[i * cols..(i + 1) * cols];
        for (o, &wij) in out.iter_mut().zip(row) {
            *o = *o + xi * wij;
        }
    }
    out
}

fn dense_tanh<T: Scalar>(x: &[T], w: &Array2<T>, b: &Array1<T>) -> Vec<T> {
    let mut out = dense(x, w, b);
    for v in &mut out {
        *v = v.tanh();
    }
    out
}
