mod common;

use arena_core::rl::gae::compute_gae;
use arena_core::rl::ppo::{loss_and_grad, ppo_update, Adam, Batch, LossCoefs, PpoConfig, RolloutBuffer};
use arena_core::rl::PolicyParams;
use arena_core::rng::SplitMix64;
use common::{gradient_relative_error, random_loss_instance};
use proptest::prelude::*;
use rand::Rng;

fn random_buffer(obs_dim: usize, n_actions: usize, rows: usize, params: &PolicyParams<f32>, seed: u64) -> RolloutBuffer {
    let mut rng = SplitMix64::new(seed);
    let mut buf = RolloutBuffer::new(obs_dim, n_actions, rows);
    for _ in 0..rows {
        let obs: Vec<f32> = (0..obs_dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let valid: Vec<usize> = (0..n_actions).collect();
        let (logits, value) = params.forward(&obs);
        let a = rng.gen_range(0..n_actions);
        let z: f32 = logits.iter().map(|l| l.exp()).sum();
        let log_p = logits[a] - z.ln();
        buf.push(&obs, &valid, a, log_p, value, rng.gen_range(-1.0..1.0), false);
    }
    buf
}

fn plain_config() -> PpoConfig {
    PpoConfig {
        normalize_advantages: false,
        max_grad_norm: 1e9,
        ..PpoConfig::default()
    }
}

#[test]
fn gradients_match_finite_differences() {
    for seed in 0..10 {
        let (params, batch, coefs) = random_loss_instance(seed);
        let err = gradient_relative_error(&params, &batch, coefs);
        assert!(err < 1e-6, "seed {seed}: relative error {err:e}");
    }
}

#[test]
fn zero_advantage_and_exact_values_leave_params_unchanged() {
    let mut rng = SplitMix64::new(4);
    let mut params = PolicyParams::<f32>::init(5, 3, &mut rng);
    let before = params.clone();
    let buf = random_buffer(5, 3, 32, &params, 1);
    let adv = vec![0.0; 32];
    // Value targets equal to the network's own batched predictions.
    let obs = ndarray::Array2::from_shape_vec((32, 5), buf.obs.clone()).unwrap();
    let returns = params.forward_batch(obs.view()).values.to_vec();
    let cfg = PpoConfig {
        entropy_coef: 0.0,
        batch_size: 8,
        epochs: 3,
        ..plain_config()
    };
    let mut adam = Adam::new(&params, cfg.adam_eps);
    ppo_update(&mut params, &mut adam, &buf, &adv, &returns, &cfg, &mut rng).unwrap();
    assert_eq!(params, before);
}

#[test]
fn single_sample_step_matches_closed_form_adam() {
    let mut rng = SplitMix64::new(9);
    let mut params = PolicyParams::<f32>::init(4, 3, &mut rng);
    let buf = random_buffer(4, 3, 1, &params, 2);
    let adv = [0.8f32];
    let returns = [0.3f32];
    let cfg = PpoConfig {
        epochs: 1,
        batch_size: 1,
        ..plain_config()
    };
    // Gradient of the single-sample loss, computed in f64.
    let batch = Batch::gather(&buf, &[0], &adv, &returns);
    let batch64 = Batch {
        obs: batch.obs.mapv(f64::from),
        valid: batch.valid.clone(),
        actions: batch.actions.clone(),
        old_log_probs: batch.old_log_probs.iter().map(|&x| f64::from(x)).collect(),
        advantages: vec![0.8],
        returns: vec![0.3],
    };
    let p64 = params.map(f64::from);
    let (_, grad) = loss_and_grad(&p64, &batch64, LossCoefs::from(&cfg), true);
    let grad = grad.unwrap();
    // One bias-corrected Adam step from zero moments is lr * g / (|g| + eps).
    let expected: Vec<f64> = p64
        .tensors()
        .iter()
        .zip(grad.tensors())
        .flat_map(|(p, g)| {
            p.iter()
                .zip(g.iter())
                .map(|(&p, &g)| p - cfg.learning_rate * g / (g.abs() + cfg.adam_eps))
                .collect::<Vec<_>>()
        })
        .collect();
    let mut adam = Adam::new(&params, cfg.adam_eps);
    ppo_update(&mut params, &mut adam, &buf, &adv, &returns, &cfg, &mut rng).unwrap();
    let got: Vec<f32> = params.tensors().iter().flat_map(|t| t.iter().copied()).collect();
    for (i, (g, e)) in got.iter().zip(&expected).enumerate() {
        assert!((f64::from(*g) - e).abs() < 1e-6, "param {i}: {g} vs {e}");
    }
}

#[test]
fn loss_decreases_on_the_fitted_buffer() {
    let mut rng = SplitMix64::new(21);
    let mut params = PolicyParams::<f32>::init(6, 4, &mut rng);
    let buf = random_buffer(6, 4, 128, &params, 3);
    let adv: Vec<f32> = (0..128).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let returns: Vec<f32> = (0..128).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let cfg = PpoConfig {
        batch_size: 32,
        epochs: 10,
        ..PpoConfig::default()
    };
    let mut adam = Adam::new(&params, cfg.adam_eps);
    let stats = ppo_update(&mut params, &mut adam, &buf, &adv, &returns, &cfg, &mut rng).unwrap();
    assert!(stats.final_loss < stats.initial_loss, "{stats:?}");
    assert_eq!(stats.minibatches, 40);
}

proptest! {
    #[test]
    fn gae_with_unit_lambda_is_discounted_return_minus_value(
        rewards in prop::collection::vec(-1.0f64..1.0, 1..20),
        seed in any::<u64>(),
    ) {
        let mut rng = SplitMix64::new(seed);
        let n = rewards.len();
        let values: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut dones = vec![false; n];
        dones[n - 1] = true;
        let gamma = 0.9;
        let (adv, returns) = compute_gae(&rewards, &values, &dones, 123.0, gamma, 1.0);
        let mut g = 0.0;
        for t in (0..n).rev() {
            g = rewards[t] + gamma * g;
            prop_assert!((returns[t] - g).abs() < 1e-9);
            prop_assert!((adv[t] - (g - values[t])).abs() < 1e-9);
        }
    }

    #[test]
    fn gae_with_zero_lambda_is_one_step_error(
        rewards in prop::collection::vec(-1.0f64..1.0, 1..20),
        last in -1.0f64..1.0,
    ) {
        let n = rewards.len();
        let values: Vec<f64> = (0..n).map(|t| (t as f64 * 0.37).sin()).collect();
        let dones: Vec<bool> = (0..n).map(|t| t % 5 == 4).collect();
        let (adv, _) = compute_gae(&rewards, &values, &dones, last, 0.99, 0.0);
        for t in 0..n {
            let next = if dones[t] { 0.0 } else if t + 1 < n { values[t + 1] } else { last };
            prop_assert!((adv[t] - (rewards[t] + 0.99 * next - values[t])).abs() < 1e-12);
        }
    }
}
