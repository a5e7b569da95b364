//! Generalized advantage estimation over a rollout buffer.

use num_traits::Float;

/// Advantages and returns for one rollout.
///
/// `dones[t]` marks that the episode ended with transition `t`, so nothing is
/// bootstrapped across it. `last_value` is the value estimate of the state
/// following the final transition (ignored when that transition is terminal).
pub fn compute_gae<T: Float>(
    rewards: &[T],
    values: &[T],
    dones: &[bool],
    last_value: T,
    gamma: T,
    lambda: T,
) -> (Vec<T>, Vec<T>) {
    let n = rewards.len();
    assert!(values.len() == n && dones.len() == n, "rollout arrays differ in length");
    let mut advantages = vec![T::zero(); n];
    let mut next_adv = T::zero();
    let mut next_value = last_value;
    for t in (0..n).rev() {
        let live = if dones[t] { T::zero() } else { T::one() };
        let delta = rewards[t] + gamma * next_value * live - values[t];
        next_adv = delta + gamma * lambda * live * next_adv;
        advantages[t] = next_adv;
        next_value = values[t];
    }
    let returns = advantages.iter().zip(values).map(|(&a, &v)| a + v).collect();
    (advantages, returns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_computed_three_step_case() {
        let (adv, ret) = compute_gae(&[0.0, 0.0, 1.0], &[0.5, 0.2, 0.1], &[false, false, true], 0.0, 0.99, 0.95);
        let expected = [0.39910, 0.74545, 0.9];
        for (a, e) in adv.iter().zip(expected) {
            assert!((a - e).abs() < 5e-5, "{a} vs {e}");
        }
        assert!((ret[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_inputs_give_zero_advantages() {
        let (adv, _) = compute_gae(&[0.0; 5], &[0.0; 5], &[false, false, true, false, false], 0.0, 0.99, 0.95);
        assert!(adv.iter().all(|&a| a == 0.0));
    }

    #[test]
    fn lambda_zero_is_one_step_td() {
        let r = [1.0, -0.5, 0.25];
        let v = [0.3, 0.1, -0.2];
        let (adv, _) = compute_gae(&r, &v, &[false, false, false], 0.7, 0.9, 0.0);
        let delta = [1.0 + 0.9 * 0.1 - 0.3, -0.5 + 0.9 * -0.2 - 0.1, 0.25 + 0.9 * 0.7 + 0.2];
        for (a, d) in adv.iter().zip(delta) {
            assert!((a - d).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn recursion_holds_with_done_masking(
            steps in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, any::<bool>()), 1..40),
            last in -1.0f64..1.0,
            gamma in 0.5f64..1.0,
            lambda in 0.0f64..1.0,
        ) {
            let r: Vec<f64> = steps.iter().map(|s| s.0).collect();
            let v: Vec<f64> = steps.iter().map(|s| s.1).collect();
            let d: Vec<bool> = steps.iter().map(|s| s.2).collect();
            let (adv, ret) = compute_gae(&r, &v, &d, last, gamma, lambda);
            let n = r.len();
            for t in 0..n {
                let live = if d[t] { 0.0 } else { 1.0 };
                let next_v = if t + 1 < n { v[t + 1] } else { last };
                let next_a = if t + 1 < n { adv[t + 1] } else { 0.0 };
                let delta = r[t] + gamma * next_v * live - v[t];
                prop_assert!((adv[t] - (delta + gamma * lambda * live * next_a)).abs() < 1e-6);
                prop_assert!((ret[t] - adv[t] - v[t]).abs() < 1e-9);
            }
        }
    }
}
