//! Self-play training loop against a random mover and then against frozen
//! checkpoints of the learner itself.

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

use super::dist::{masked_distribution, sample};
use super::gae::compute_gae;
use super::network::PolicyParams;
use super::ppo::{ppo_update, Adam, PpoConfig, PpoError, RolloutBuffer, UpdateStats};
use super::schedule::{sample_opponent, CheckpointPool, OpponentChoice, TrainingSchedule};
use crate::env::{ActionIndex, EnvError, Environment, Seat};
use crate::rng::{mix, SplitMix64};

/// Fraction of truncated episodes above which a game is flagged.
pub const TRUNCATION_FLAG_RATE: f64 = 0.2;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("environment error during training: {0}")]
    Env(#[from] EnvError),
    #[error(transparent)]
    Ppo(#[from] PpoError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainLogLine {
    pub timestep: u64,
    /// Mean learner return over episodes finished since the previous line.
    pub mean_episode_reward: Option<f64>,
    pub epsilon: f64,
    pub episodes: u64,
    pub update: Option<UpdateStats>,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub pool: CheckpointPool,
    pub log: Vec<TrainLogLine>,
    pub episodes: u64,
    pub truncated_episodes: u64,
    pub updates: usize,
}

impl TrainOutput {
    pub fn truncation_rate(&self) -> f64 {
        if self.episodes == 0 {
            0.0
        } else {
            self.truncated_episodes as f64 / self.episodes as f64
        }
    }

    /// True when too many episodes hit the move cap.
    pub fn flagged(&self) -> bool {
        self.truncation_rate() > TRUNCATION_FLAG_RATE
    }
}

enum EpisodeEnd {
    /// Reward to the learner for the game's result.
    Terminal(f32),
    Truncated,
}

fn policy_action(params: &PolicyParams<f32>, env: &dyn Environment, valid: &[usize], rng: &mut SplitMix64) -> usize {
    let (logits, _) = params.forward(env.observation().as_slice());
    let probs = masked_distribution(&logits, valid).expect("running game has legal moves");
    sample(&probs, rng)
}

/// Let the opponent move until it is the learner's turn or the game ends.
fn opponent_turns(
    env: &mut dyn Environment,
    learner: Seat,
    opponent: OpponentChoice,
    pool: &CheckpointPool,
    rng: &mut SplitMix64,
) -> Result<Option<EpisodeEnd>, EnvError> {
    while !env.is_done() && env.current_player() != learner {
        let valid: Vec<usize> = env.valid_moves().iter().map(|a| a.get()).collect();
        let action = match opponent {
            OpponentChoice::Random => *valid.choose(rng).expect("running game has legal moves"),
            OpponentChoice::Checkpoint(i) => policy_action(&pool.entries()[i].params, env, &valid, rng),
        };
        let out = env.step(ActionIndex(action))?;
        if out.terminated {
            // The opponent's reward is its own; the learner gets the opposite result.
            return Ok(Some(EpisodeEnd::Terminal(if out.reward > 0.0 { -1.0 } else { 1.0 })));
        }
        if out.truncated {
            return Ok(Some(EpisodeEnd::Truncated));
        }
    }
    Ok(None)
}

/// Train one learner on `env` (which should already carry its move cap).
/// Deterministic for a given seed. `on_log` sees every log line as it is produced.
pub fn train(
    mut env: Box<dyn Environment>,
    schedule: &TrainingSchedule,
    config: &PpoConfig,
    seed: u64,
    mut on_log: impl FnMut(&TrainLogLine),
) -> Result<TrainOutput, TrainError> {
    schedule.validate().map_err(TrainError::Config)?;
    config.validate().map_err(TrainError::Config)?;
    let spec = env.spec().clone();
    let mut rng = SplitMix64::new(mix(seed));
    let mut params = PolicyParams::<f32>::init(spec.observation_dim, spec.action_space_size, &mut rng);
    let mut adam = Adam::new(&params, config.adam_eps);
    let mut buffer = RolloutBuffer::new(spec.observation_dim, spec.action_space_size, config.rollout_length);
    let mut pool = CheckpointPool::new();
    let mut log = Vec::new();
    let (mut episodes, mut truncated, mut updates) = (0u64, 0u64, 0usize);
    let (mut window_return, mut window_episodes) = (0.0f64, 0u64);
    let mut t = 0u64;

    while t < schedule.total_timesteps {
        let opponent = sample_opponent(pool.len(), t, schedule, &mut rng);
        let learner = if rng.gen::<bool>() { Seat::P1 } else { Seat::P2 };
        env.reset(Some(rng.next()));
        episodes += 1;
        let mut episode_return = 0.0f64;
        let mut end = opponent_turns(env.as_mut(), learner, opponent, &pool, &mut rng)?;

        while end.is_none() && t < schedule.total_timesteps {
            let obs = env.observation();
            let valid: Vec<usize> = env.valid_moves().iter().map(|a| a.get()).collect();
            let (logits, value) = params.forward(obs.as_slice());
            let probs = masked_distribution(&logits, &valid).expect("running game has legal moves");
            let action = if rng.gen::<f64>() < schedule.epsilon_at(t) {
                *valid.choose(&mut rng).expect("non-empty")
            } else {
                sample(&probs, &mut rng)
            };
            let out = env.step(ActionIndex(action))?;
            end = if out.terminated {
                Some(EpisodeEnd::Terminal(out.reward))
            } else if out.truncated {
                Some(EpisodeEnd::Truncated)
            } else {
                opponent_turns(env.as_mut(), learner, opponent, &pool, &mut rng)?
            };
            let reward = match end {
                Some(EpisodeEnd::Terminal(r)) => r,
                _ => 0.0,
            };
            episode_return += f64::from(reward);
            buffer.push(obs.as_slice(), &valid, action, probs[action].ln(), value, reward, end.is_some());
            t += 1;

            if schedule.is_checkpoint(t) {
                pool.push(t, params.clone());
            }
            if buffer.is_full() {
                let last_value = if end.is_some() {
                    0.0
                } else {
                    params.forward(env.observation().as_slice()).1
                };
                let (adv, ret) = compute_gae(
                    &buffer.rewards,
                    &buffer.values,
                    &buffer.dones,
                    last_value,
                    config.gamma as f32,
                    config.gae_lambda as f32,
                );
                let stats = ppo_update(&mut params, &mut adam, &buffer, &adv, &ret, config, &mut rng)?;
                buffer.clear();
                updates += 1;
                let line = TrainLogLine {
                    timestep: t,
                    mean_episode_reward: (window_episodes > 0).then(|| window_return / window_episodes as f64),
                    epsilon: schedule.epsilon_at(t),
                    episodes,
                    update: Some(stats),
                };
                on_log(&line);
                log.push(line);
                window_return = 0.0;
                window_episodes = 0;
            }
        }
        match end {
            Some(EpisodeEnd::Truncated) => truncated += 1,
            Some(EpisodeEnd::Terminal(_)) => {}
            None => {
                // Training budget ran out mid-episode.
                episodes -= 1;
                continue;
            }
        }
        window_return += episode_return;
        window_episodes += 1;
    }

    let line = TrainLogLine {
        timestep: t,
        mean_episode_reward: (window_episodes > 0).then(|| window_return / window_episodes as f64),
        epsilon: schedule.epsilon_at(t),
        episodes,
        update: None,
    };
    on_log(&line);
    log.push(line);
    Ok(TrainOutput {
        pool,
        log,
        episodes,
        truncated_episodes: truncated,
        updates,
    })
}
