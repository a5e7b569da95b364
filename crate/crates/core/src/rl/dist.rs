//! Action distributions restricted to the legal moves.

use num_traits::Float;
use rand::Rng;
use thiserror::Error;

use crate::rng::SplitMix64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DistError {
    #[error("no valid actions to choose from")]
    NoValidActions,
    #[error("valid action {0} is outside the action space of size {1}")]
    OutOfRange(usize, usize),
}

/// Softmax over the logits of `valid`; every other entry is exactly zero.
pub fn masked_distribution<T: Float>(logits: &[T], valid: &[usize]) -> Result<Vec<T>, DistError> {
    if valid.is_empty() {
        return Err(DistError::NoValidActions);
    }
    if let Some(&a) = valid.iter().find(|&&a| a >= logits.len()) {
        return Err(DistError::OutOfRange(a, logits.len()));
    }
    let max = valid.iter().map(|&a| logits[a]).fold(T::neg_infinity(), T::max);
    let mut probs = vec![T::zero(); logits.len()];
    let mut total = T::zero();
    for &a in valid {
        let e = (logits[a] - max).exp();
        probs[a] = e;
        total = total + e;
    }
    for &a in valid {
        probs[a] = probs[a] / total;
    }
    Ok(probs)
}

/// Index of the largest probability; ties go to the lowest index.
pub fn argmax<T: Float>(probs: &[T]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

/// Draw an index from `probs` (entries summing to one).
pub fn sample<T: Float>(probs: &[T], rng: &mut SplitMix64) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, &p) in probs.iter().enumerate() {
        let p = p.to_f64().unwrap_or(0.0);
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

/// Entropy of a distribution, skipping zero entries.
pub fn entropy<T: Float>(probs: &[T]) -> T {
    probs
        .iter()
        .filter(|&&p| p > T::zero())
        .fold(T::zero(), |h, &p| h - p * p.ln())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_logits_split_evenly_over_valid() {
        let p = masked_distribution(&[0.0f64; 6], &[2, 5]).unwrap();
        assert_eq!(p, vec![0.0, 0.0, 0.5, 0.0, 0.0, 0.5]);
    }

    #[test]
    fn single_valid_index_gets_everything() {
        let p = masked_distribution(&[3.0f32, -1.0, 7.0], &[1]).unwrap();
        assert_eq!(p, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn two_logit_softmax() {
        let p = masked_distribution(&[1.0f64, 0.0], &[0, 1]).unwrap();
        assert!((p[0] - 0.731_058_6).abs() < 1e-7);
        assert!((p[1] - 0.268_941_4).abs() < 1e-7);
    }

    #[test]
    fn empty_valid_set_is_an_error() {
        assert_eq!(masked_distribution(&[0.0f32; 3], &[]), Err(DistError::NoValidActions));
    }

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        assert_eq!(argmax(&[0.25, 0.25, 0.5, 0.5]), 2);
        assert_eq!(argmax(&[0.0, 0.5, 0.5]), 1);
    }

    proptest! {
        #[test]
        fn masked_distribution_is_normalised(
            logits in prop::collection::vec(-30.0f64..30.0, 1..20),
            picks in prop::collection::vec(any::<prop::sample::Index>(), 1..20),
        ) {
            let mut valid: Vec<usize> = picks.iter().map(|i| i.index(logits.len())).collect();
            valid.sort_unstable();
            valid.dedup();
            let p = masked_distribution(&logits, &valid).unwrap();
            let total: f64 = p.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-6);
            for (i, &pi) in p.iter().enumerate() {
                if valid.contains(&i) {
                    prop_assert!(pi > 0.0);
                } else {
                    prop_assert_eq!(pi, 0.0);
                }
            }
        }

        #[test]
        fn samples_land_on_valid_indices(seed in any::<u64>(), mask in 1u32..256) {
            let valid: Vec<usize> = (0..8).filter(|i| mask >> i & 1 == 1).collect();
            let p = masked_distribution(&[0.5f32, -1.0, 2.0, 0.0, 1.0, 3.0, -2.0, 0.1], &valid).unwrap();
            let mut rng = SplitMix64::new(seed);
            for _ in 0..20 {
                prop_assert!(valid.contains(&sample(&p, &mut rng)));
            }
        }
    }
}
