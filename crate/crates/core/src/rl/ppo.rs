//! Clipped-surrogate policy optimisation: rollout buffer, loss with manual
//! gradients, Adam, and the epoch/minibatch update loop.

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use thiserror::Error;

use super::dist::masked_distribution;
use super::network::{PolicyParams, Scalar};
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq)]
pub struct PpoConfig {
    pub learning_rate: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub clip_range: f64,
    pub batch_size: usize,
    pub rollout_length: usize,
    pub epochs: usize,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub max_grad_norm: f64,
    /// Rescale advantages to zero mean and unit variance before each update.
    pub normalize_advantages: bool,
    pub adam_eps: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            learning_rate: 3e-4,
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_range: 0.2,
            batch_size: 64,
            rollout_length: 2048,
            epochs: 10,
            value_coef: 0.5,
            entropy_coef: 0.0,
            max_grad_norm: 0.5,
            normalize_advantages: true,
            adam_eps: 1e-5,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("learning_rate", self.learning_rate),
            ("gamma", self.gamma),
            ("gae_lambda", self.gae_lambda),
            ("clip_range", self.clip_range),
            ("max_grad_norm", self.max_grad_norm),
            ("adam_eps", self.adam_eps),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{name} must be positive, got {v}"));
            }
        }
        if self.value_coef < 0.0 || self.entropy_coef < 0.0 {
            return Err("loss coefficients must be non-negative".into());
        }
        if self.clip_range >= 1.0 {
            return Err(format!("clip_range must be below 1, got {}", self.clip_range));
        }
        if self.gamma > 1.0 || self.gae_lambda > 1.0 {
            return Err("gamma and gae_lambda must not exceed 1".into());
        }
        if self.batch_size == 0 || self.rollout_length == 0 || self.epochs == 0 {
            return Err("batch_size, rollout_length and epochs must be positive".into());
        }
        Ok(())
    }
}

/// `min(r * A, clip(r, 1 - eps, 1 + eps) * A)`.
pub fn clipped_objective(ratio: f64, advantage: f64, clip_range: f64) -> f64 {
    let clipped = ratio.clamp(1.0 - clip_range, 1.0 + clip_range);
    (ratio * advantage).min(clipped * advantage)
}

/// Learner transitions collected between updates.
#[derive(Debug, Clone, PartialEq)]
pub struct RolloutBuffer {
    pub obs_dim: usize,
    pub n_actions: usize,
    pub capacity: usize,
    pub obs: Vec<f32>,
    /// Row-major `len x n_actions` legality mask.
    pub masks: Vec<bool>,
    pub actions: Vec<usize>,
    pub log_probs: Vec<f32>,
    pub values: Vec<f32>,
    pub rewards: Vec<f32>,
    pub dones: Vec<bool>,
}

impl RolloutBuffer {
    pub fn new(obs_dim: usize, n_actions: usize, capacity: usize) -> Self {
        Self {
            obs_dim,
            n_actions,
            capacity,
            obs: Vec::with_capacity(capacity * obs_dim),
            masks: Vec::with_capacity(capacity * n_actions),
            actions: Vec::with_capacity(capacity),
            log_probs: Vec::with_capacity(capacity),
            values: Vec::with_capacity(capacity),
            rewards: Vec::with_capacity(capacity),
            dones: Vec::with_capacity(capacity),
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn push(&mut self, obs: &[f32], valid: &[usize], action: usize, log_prob: f32, value: f32, reward: f32, done: bool) {
        assert_eq!(obs.len(), self.obs_dim);
        self.obs.extend_from_slice(obs);
        let start = self.masks.len();
        self.masks.resize(start + self.n_actions, false);
        for &a in valid {
            self.masks[start + a] = true;
        }
        self.actions.push(action);
        self.log_probs.push(log_prob);
        self.values.push(value);
        self.rewards.push(reward);
        self.dones.push(done);
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.len() >= self.capacity
    }

    /// Mark the most recent transition as the end of its episode and add `reward`.
    pub fn close_last(&mut self, reward: f32) {
        if let Some(last) = self.rewards.last_mut() {
            *last += reward;
            *self.dones.last_mut().unwrap() = true;
        }
    }

    pub fn clear(&mut self) {
        self.obs.clear();
        self.masks.clear();
        self.actions.clear();
        self.log_probs.clear();
        self.values.clear();
        self.rewards.clear();
        self.dones.clear();
    }

    pub fn valid_actions(&self, row: usize) -> Vec<usize> {
        let m = &self.masks[row * self.n_actions..(row + 1) * self.n_actions];
        (0..self.n_actions).filter(|&a| m[a]).collect()
    }
}

/// Training samples for one loss evaluation.
#[derive(Debug, Clone)]
pub struct Batch<T: Scalar> {
    pub obs: Array2<T>,
    pub valid: Vec<Vec<usize>>,
    pub actions: Vec<usize>,
    pub old_log_probs: Vec<T>,
    pub advantages: Vec<T>,
    pub returns: Vec<T>,
}

impl Batch<f32> {
    pub fn gather(buffer: &RolloutBuffer, rows: &[usize], advantages: &[f32], returns: &[f32]) -> Self {
        let d = buffer.obs_dim;
        let obs = Array2::from_shape_fn((rows.len(), d), |(i, j)| buffer.obs[rows[i] * d + j]);
        Self {
            obs,
            valid: rows.iter().map(|&r| buffer.valid_actions(r)).collect(),
            actions: rows.iter().map(|&r| buffer.actions[r]).collect(),
            old_log_probs: rows.iter().map(|&r| buffer.log_probs[r]).collect(),
            advantages: rows.iter().map(|&r| advantages[r]).collect(),
            returns: rows.iter().map(|&r| returns[r]).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossCoefs {
    pub clip_range: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
}

impl From<&PpoConfig> for LossCoefs {
    fn from(c: &PpoConfig) -> Self {
        Self {
            clip_range: c.clip_range,
            value_coef: c.value_coef,
            entropy_coef: c.entropy_coef,
        }
    }
}

/// Loss components averaged over a batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTerms<T> {
    pub total: T,
    pub policy: T,
    pub value: T,
    pub entropy: T,
    pub clip_fraction: T,
}

/// Loss `-surrogate + value_coef * mse - entropy_coef * entropy` and, when
/// requested, its gradient with respect to every parameter.
pub fn loss_and_grad<T: Scalar>(
    params: &PolicyParams<T>,
    batch: &Batch<T>,
    coefs: LossCoefs,
    want_grad: bool,
) -> (LossTerms<T>, Option<PolicyParams<T>>) {
    let c = |x: f64| T::from(x).unwrap();
    let n = batch.actions.len();
    let inv_n = c(1.0 / n as f64);
    let (lo, hi) = (c(1.0 - coefs.clip_range), c(1.0 + coefs.clip_range));
    let (vc, ec) = (c(coefs.value_coef), c(coefs.entropy_coef));
    let fwd = params.forward_batch(batch.obs.view());
    let mut d_logits = Array2::<T>::zeros(fwd.logits.raw_dim());
    let mut d_values = Array1::<T>::zeros(n);
    let (mut policy, mut value, mut entropy, mut clipped) = (T::zero(), T::zero(), T::zero(), T::zero());

    for i in 0..n {
        let row = fwd.logits.row(i);
        let logits = row.as_slice().expect("contiguous logits");
        let valid = &batch.valid[i];
        let probs = masked_distribution(logits, valid).expect("buffer rows have legal moves");
        let a = batch.actions[i];
        let log_p = probs[a].ln();
        let ratio = (log_p - batch.old_log_probs[i]).exp();
        let adv = batch.advantages[i];
        let surr1 = ratio * adv;
        let surr2 = ratio.max(lo).min(hi) * adv;
        policy = policy - surr1.min(surr2) * inv_n;
        if ratio < lo || ratio > hi {
            clipped = clipped + inv_n;
        }
        let h = valid.iter().fold(T::zero(), |h, &j| h - probs[j] * probs[j].ln());
        entropy = entropy + h * inv_n;
        let err = fwd.values[i] - batch.returns[i];
        value = value + err * err * inv_n;

        if want_grad {
            // The clipped branch is constant in the parameters.
            let d_logp = if surr1 <= surr2 { -ratio * adv * inv_n } else { T::zero() };
            for &j in valid {
                let indicator = if j == a { T::one() } else { T::zero() };
                let d_pol = d_logp * (indicator - probs[j]);
                let d_ent = ec * inv_n * probs[j] * (probs[j].ln() + h);
                d_logits[[i, j]] = d_pol + d_ent;
            }
            d_values[i] = c(2.0) * vc * err * inv_n;
        }
    }
    let terms = LossTerms {
        total: policy + vc * value - ec * entropy,
        policy,
        value,
        entropy,
        clip_fraction: clipped,
    };
    let grads = want_grad.then(|| params.backward(batch.obs.view(), &fwd, &d_logits, &d_values));
    (terms, grads)
}

/// Scale gradients in place so their global L2 norm is at most `max_norm`;
/// returns the norm before scaling.
pub fn clip_grad_norm(grads: &mut PolicyParams<f32>, max_norm: f64) -> f64 {
    let norm = grads
        .tensors()
        .iter()
        .flat_map(|t| t.iter())
        .map(|&g| f64::from(g) * f64::from(g))
        .sum::<f64>()
        .sqrt();
    if norm > max_norm {
        let scale = (max_norm / (norm + 1e-6)) as f32;
        for t in grads.tensors_mut() {
            t.iter_mut().for_each(|g| *g *= scale);
        }
    }
    norm
}

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: i32,
    m: PolicyParams<f32>,
    v: PolicyParams<f32>,
}

impl Adam {
    pub fn new(shape: &PolicyParams<f32>, eps: f64) -> Self {
        let zeros = PolicyParams::zeros(shape.obs_dim, shape.n_actions);
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps,
            step: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn apply(&mut self, params: &mut PolicyParams<f32>, grads: &PolicyParams<f32>, lr: f64) {
        self.step += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let bc1 = 1.0 - b1.powi(self.step);
        let bc2 = 1.0 - b2.powi(self.step);
        let tensors = params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.m.tensors_mut().into_iter().zip(self.v.tensors_mut()));
        for ((p, g), (m, v)) in tensors {
            for i in 0..p.len() {
                let gi = f64::from(g[i]);
                let mi = b1 * f64::from(m[i]) + (1.0 - b1) * gi;
                let vi = b2 * f64::from(v[i]) + (1.0 - b2) * gi * gi;
                m[i] = mi as f32;
                v[i] = vi as f32;
                let update = lr * (mi / bc1) / ((vi / bc2).sqrt() + self.eps);
                p[i] = (f64::from(p[i]) - update) as f32;
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PpoError {
    #[error("update called with an empty rollout buffer")]
    EmptyBuffer,
    #[error("non-finite loss in epoch {epoch}; update aborted and parameters left unchanged")]
    NonFinite { epoch: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpdateStats {
    /// Full-buffer loss before and after the update, on the same advantages.
    pub initial_loss: f32,
    pub final_loss: f32,
    pub policy_loss: f32,
    pub value_loss: f32,
    pub entropy: f32,
    pub clip_fraction: f32,
    pub minibatches: usize,
}

/// Rescale to zero mean and unit variance.
pub fn normalize(values: &[f32]) -> Vec<f32> {
    let n = values.len() as f64;
    let mean = values.iter().map(|&x| f64::from(x)).sum::<f64>() / n;
    let var = values.iter().map(|&x| (f64::from(x) - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    values.iter().map(|&x| ((f64::from(x) - mean) / (std + 1e-8)) as f32).collect()
}

/// Run `epochs` passes of shuffled minibatches over `buffer`. Works on copies
/// of the parameters and optimiser state, committing only if every loss is finite.
pub fn ppo_update(
    params: &mut PolicyParams<f32>,
    adam: &mut Adam,
    buffer: &RolloutBuffer,
    advantages: &[f32],
    returns: &[f32],
    config: &PpoConfig,
    rng: &mut SplitMix64,
) -> Result<UpdateStats, PpoError> {
    let n = buffer.len();
    if n == 0 {
        return Err(PpoError::EmptyBuffer);
    }
    let adv = if config.normalize_advantages {
        normalize(advantages)
    } else {
        advantages.to_vec()
    };
    let coefs = LossCoefs::from(config);
    let all: Vec<usize> = (0..n).collect();
    let full = Batch::gather(buffer, &all, &adv, returns);
    let (before, _) = loss_and_grad(params, &full, coefs, false);

    let mut p = params.clone();
    let mut opt = adam.clone();
    let mut order = all.clone();
    let mut minibatches = 0;
    for epoch in 0..config.epochs {
        order.shuffle(rng);
        for rows in order.chunks(config.batch_size) {
            let batch = Batch::gather(buffer, rows, &adv, returns);
            let (terms, grads) = loss_and_grad(&p, &batch, coefs, true);
            let mut grads = grads.expect("gradient requested");
            if !terms.total.is_finite() || !grads.is_finite() {
                return Err(PpoError::NonFinite { epoch });
            }
            clip_grad_norm(&mut grads, config.max_grad_norm);
            opt.apply(&mut p, &grads, config.learning_rate);
            minibatches += 1;
        }
    }
    if !p.is_finite() {
        return Err(PpoError::NonFinite { epoch: config.epochs - 1 });
    }
    let (after, _) = loss_and_grad(&p, &full, coefs, false);
    *params = p;
    *adam = opt;
    Ok(UpdateStats {
        initial_loss: before.total,
        final_loss: after.total,
        policy_loss: after.policy,
        value_loss: after.value,
        entropy: after.entropy,
        clip_fraction: after.clip_fraction,
        minibatches,
    })
}
