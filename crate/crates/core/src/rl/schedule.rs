//! Self-play schedule: exploration decay, checkpoint times and opponent sampling.

use std::sync::Arc;

use rand::Rng;

use super::network::PolicyParams;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSchedule {
    pub total_timesteps: u64,
    pub checkpoint_interval: u64,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
}

impl TrainingSchedule {
    /// One million learner steps with a checkpoint every 250k.
    pub fn paper() -> Self {
        Self {
            total_timesteps: 1_000_000,
            checkpoint_interval: 250_000,
            epsilon_start: 1.0,
            epsilon_end: 0.1,
        }
    }

    /// Reduced schedule for quick end-to-end runs.
    pub fn desk() -> Self {
        Self {
            total_timesteps: 200_000,
            checkpoint_interval: 50_000,
            ..Self::paper()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.checkpoint_interval == 0 || self.total_timesteps == 0 {
            return Err("total_timesteps and checkpoint_interval must be positive".into());
        }
        if self.total_timesteps % self.checkpoint_interval != 0 {
            return Err(format!(
                "checkpoint_interval {} does not divide total_timesteps {}",
                self.checkpoint_interval, self.total_timesteps
            ));
        }
        Ok(())
    }

    /// Linear decay from `epsilon_start` at t = 0 to `epsilon_end` at the last step.
    pub fn epsilon_at(&self, t: u64) -> f64 {
        let frac = (t.min(self.total_timesteps) as f64) / self.total_timesteps as f64;
        self.epsilon_start + (self.epsilon_end - self.epsilon_start) * frac
    }

    pub fn checkpoint_timesteps(&self) -> Vec<u64> {
        (1..=self.total_timesteps / self.checkpoint_interval)
            .map(|k| k * self.checkpoint_interval)
            .collect()
    }

    pub fn is_checkpoint(&self, t: u64) -> bool {
        t > 0 && t % self.checkpoint_interval == 0 && t <= self.total_timesteps
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub timestep: u64,
    pub params: Arc<PolicyParams<f32>>,
}

/// Frozen snapshots in the order they were taken.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CheckpointPool {
    entries: Vec<Checkpoint>,
}

impl CheckpointPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, timestep: u64, params: PolicyParams<f32>) {
        if let Some(last) = self.entries.last() {
            assert!(timestep > last.timestep, "checkpoint timesteps must increase");
        }
        self.entries.push(Checkpoint {
            timestep,
            params: Arc::new(params),
        });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[Checkpoint] {
        &self.entries
    }

    pub fn last(&self) -> Option<&Checkpoint> {
        self.entries.last()
    }
}

/// Who the learner plays in the next episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpponentChoice {
    Random,
    /// Index into the checkpoint pool.
    Checkpoint(usize),
}

/// Uniformly random mover before the first checkpoint interval has elapsed,
/// otherwise a uniform draw from the pool.
pub fn sample_opponent(pool_len: usize, t: u64, schedule: &TrainingSchedule, rng: &mut SplitMix64) -> OpponentChoice {
    if t < schedule.checkpoint_interval || pool_len == 0 {
        OpponentChoice::Random
    } else {
        OpponentChoice::Checkpoint(rng.gen_range(0..pool_len))
    }
}
