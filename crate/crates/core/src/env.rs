//! The environment contract shared by every game, plus the move-cap wrapper.
//!
//! A game supplies its rules through [`Rules`]; [`GameEnv`] turns those rules
//! into an [`Environment`] that owns the bookkeeping common to all games:
//! move counting, the invalid-action penalty, and the "player to move with no
//! legal move loses" convention.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SplitMix64;

/// Reward for a winning move.
pub const REWARD_WIN: f32 = 1.0;
/// Reward for a move that loses the game.
pub const REWARD_LOSS: f32 = -1.0;
/// Reward (and immediate termination) for an action outside `valid_moves()`.
pub const REWARD_INVALID: f32 = -10.0;
/// Default move cap for training, filtering and evaluation.
pub const DEFAULT_MOVE_CAP: u32 = 100;

/// Index into a game's discrete action space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActionIndex(pub usize);

impl ActionIndex {
    pub fn get(self) -> usize {
        self.0
    }
}

impl fmt::Display for ActionIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Fixed-length observation, always encoded from the perspective of the player to move.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation(pub Vec<f32>);

impl Observation {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Seat {
    P1,
    P2,
}

impl Seat {
    pub fn other(self) -> Seat {
        match self {
            Seat::P1 => Seat::P2,
            Seat::P2 => Seat::P1,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Seat::P1 => 0,
            Seat::P2 => 1,
        }
    }
}

impl fmt::Display for Seat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Seat::P1 => f.write_str("Player 1"),
            Seat::P2 => f.write_str("Player 2"),
        }
    }
}

/// Result of one transition, reported from the mover's point of view.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: f32,
    pub terminated: bool,
    pub truncated: bool,
}

impl StepOutcome {
    pub fn is_done(&self) -> bool {
        self.terminated || self.truncated
    }
}

/// Static description of one game in the suite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameSpec {
    pub id: String,
    pub title: String,
    pub rulebook_text: String,
    pub action_map_text: String,
    pub action_space_size: usize,
    pub observation_dim: usize,
    pub move_cap: u32,
    pub stochastic_setup: bool,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EnvError {
    #[error("step called on a finished episode")]
    EpisodeOver,
    #[error("environment failure: {0}")]
    Internal(String),
}

/// The four-function game contract (reset, step, render, valid_moves) plus the
/// accessors a referee needs.
pub trait Environment: Send {
    fn spec(&self) -> &GameSpec;
    fn reset(&mut self, seed: Option<u64>) -> Observation;
    fn step(&mut self, action: ActionIndex) -> Result<StepOutcome, EnvError>;
    fn render(&self) -> String;
    /// Legal actions for the player to move; empty once the episode is over.
    fn valid_moves(&self) -> Vec<ActionIndex>;
    fn observation(&self) -> Observation;
    fn current_player(&self) -> Seat;
    fn move_count(&self) -> u32;
    fn is_done(&self) -> bool;
    /// Short human-readable label for an action index, e.g. "add 7".
    fn describe_action(&self, action: ActionIndex) -> String;
    fn boxed_clone(&self) -> Box<dyn Environment>;
}

impl Clone for Box<dyn Environment> {
    fn clone(&self) -> Self {
        self.boxed_clone()
    }
}

/// What a legal move did to the game.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transition {
    Continue,
    MoverWins,
    MoverLoses,
    Draw,
}

/// Pure game rules. State transitions assume the action is legal; [`GameEnv`]
/// filters everything else through the invalid-action path.
pub trait Rules: Clone + Send + Sync + 'static {
    /// Re-deal the initial position. Deterministic games ignore `rng`.
    fn reset(&mut self, rng: &mut SplitMix64);
    fn to_move(&self) -> Seat;
    fn legal_actions(&self) -> Vec<usize>;
    fn play(&mut self, action: usize) -> Transition;
    /// Write the observation for the player to move into `out` (already cleared).
    fn encode(&self, out: &mut Vec<f32>);
    fn describe(&self) -> String;
    fn action_label(&self, action: usize) -> String;

    fn is_legal(&self, action: usize) -> bool {
        self.legal_actions().contains(&action)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Running,
    Finished { winner: Option<Seat>, invalid: bool },
}

/// Generic environment driving a [`Rules`] implementation.
#[derive(Clone)]
pub struct GameEnv<R: Rules> {
    spec: Arc<GameSpec>,
    initial: R,
    state: R,
    rng: SplitMix64,
    move_count: u32,
    status: Status,
}

impl<R: Rules> GameEnv<R> {
    /// Build an environment and reset it with seed 0.
    pub fn new(spec: Arc<GameSpec>, rules: R) -> Self {
        let mut env = Self {
            spec,
            initial: rules.clone(),
            state: rules,
            rng: SplitMix64::new(0),
            move_count: 0,
            status: Status::Running,
        };
        env.reset(Some(0));
        env
    }

    /// Environment starting from an arbitrary position. `reset` returns to the
    /// game's normal opening, not to this position.
    pub fn from_position(spec: Arc<GameSpec>, rules: R, position: R) -> Self {
        let mut env = Self::new(spec, rules);
        env.state = position;
        if env.state.legal_actions().is_empty() {
            env.status = Status::Finished {
                winner: Some(env.state.to_move().other()),
                invalid: false,
            };
        }
        env
    }

    pub fn state(&self) -> &R {
        &self.state
    }

    /// Winner of a finished episode (`None` for a draw or a running game).
    pub fn winner(&self) -> Option<Seat> {
        match self.status {
            Status::Finished { winner, .. } => winner,
            Status::Running => None,
        }
    }

    fn encode(&self) -> Observation {
        let mut out = Vec::with_capacity(self.spec.observation_dim);
        self.state.encode(&mut out);
        Observation(out)
    }
}

impl<R: Rules> Environment for GameEnv<R> {
    fn spec(&self) -> &GameSpec {
        &self.spec
    }

    fn reset(&mut self, seed: Option<u64>) -> Observation {
        if let Some(seed) = seed {
            self.rng = SplitMix64::new(seed);
        }
        self.state = self.initial.clone();
        self.state.reset(&mut self.rng);
        self.move_count = 0;
        self.status = Status::Running;
        self.encode()
    }

    fn step(&mut self, action: ActionIndex) -> Result<StepOutcome, EnvError> {
        if self.status != Status::Running {
            return Err(EnvError::EpisodeOver);
        }
        let mover = self.state.to_move();
        self.move_count += 1;
        let a = action.get();
        if a >= self.spec.action_space_size || !self.state.is_legal(a) {
            self.status = Status::Finished {
                winner: Some(mover.other()),
                invalid: true,
            };
            return Ok(StepOutcome {
                observation: self.encode(),
                reward: REWARD_INVALID,
                terminated: true,
                truncated: false,
            });
        }

        let mut transition = self.state.play(a);
        if transition == Transition::Continue && self.state.legal_actions().is_empty() {
            // Whoever must move next has no legal move and loses.
            transition = if self.state.to_move() == mover {
                Transition::MoverLoses
            } else {
                Transition::MoverWins
            };
        }
        let (reward, winner) = match transition {
            Transition::Continue => (0.0, None),
            Transition::MoverWins => (REWARD_WIN, Some(mover)),
            Transition::MoverLoses => (REWARD_LOSS, Some(mover.other())),
            Transition::Draw => (0.0, None),
        };
        let terminated = transition != Transition::Continue;
        if terminated {
            self.status = Status::Finished {
                winner,
                invalid: false,
            };
        }
        Ok(StepOutcome {
            observation: self.encode(),
            reward,
            terminated,
            truncated: false,
        })
    }

    fn render(&self) -> String {
        let mut text = self.state.describe();
        match self.status {
            Status::Running => {
                text.push_str(&format!("\nTurn: {} to move", self.state.to_move()));
            }
            Status::Finished { winner, invalid } => {
                text.push_str("\nGame over: ");
                match winner {
                    Some(seat) => text.push_str(&format!("{seat} wins")),
                    None => text.push_str("draw"),
                }
                if invalid {
                    text.push_str(" (invalid move)");
                }
            }
        }
        text
    }

    fn valid_moves(&self) -> Vec<ActionIndex> {
        if self.status != Status::Running {
            return Vec::new();
        }
        self.state.legal_actions().into_iter().map(ActionIndex).collect()
    }

    fn observation(&self) -> Observation {
        self.encode()
    }

    fn current_player(&self) -> Seat {
        self.state.to_move()
    }

    fn move_count(&self) -> u32 {
        self.move_count
    }

    fn is_done(&self) -> bool {
        self.status != Status::Running
    }

    fn describe_action(&self, action: ActionIndex) -> String {
        if action.get() < self.spec.action_space_size {
            self.state.action_label(action.get())
        } else {
            format!("out-of-range action {action}")
        }
    }

    fn boxed_clone(&self) -> Box<dyn Environment> {
        Box::new(self.clone())
    }
}

/// Truncates an episode once `cap` moves have been played without a result.
#[derive(Clone)]
pub struct MoveCap {
    inner: Box<dyn Environment>,
    cap: u32,
    truncated: bool,
}

impl MoveCap {
    pub fn cap(&self) -> u32 {
        self.cap
    }

    pub fn is_truncated(&self) -> bool {
        self.truncated
    }
}

/// Wrap `env` so that reaching `cap` moves ends the episode with `truncated = true`.
pub fn wrap_move_cap(env: Box<dyn Environment>, cap: u32) -> Box<dyn Environment> {
    assert!(cap >= 1, "move cap must be at least 1");
    Box::new(MoveCap {
        inner: env,
        cap,
        truncated: false,
    })
}

impl Environment for MoveCap {
    fn spec(&self) -> &GameSpec {
        self.inner.spec()
    }

    fn reset(&mut self, seed: Option<u64>) -> Observation {
        self.truncated = false;
        self.inner.reset(seed)
    }

    fn step(&mut self, action: ActionIndex) -> Result<StepOutcome, EnvError> {
        if self.truncated {
            return Err(EnvError::EpisodeOver);
        }
        let mut out = self.inner.step(action)?;
        if !out.terminated && self.inner.move_count() >= self.cap {
            self.truncated = true;
            out.truncated = true;
            out.reward = 0.0;
        }
        Ok(out)
    }

    fn render(&self) -> String {
        let mut text = self.inner.render();
        if self.truncated {
            text.push_str(&format!("\nGame over: draw (move cap of {} reached)", self.cap));
        }
        text
    }

    fn valid_moves(&self) -> Vec<ActionIndex> {
        if self.truncated {
            Vec::new()
        } else {
            self.inner.valid_moves()
        }
    }

    fn observation(&self) -> Observation {
        self.inner.observation()
    }

    fn current_player(&self) -> Seat {
        self.inner.current_player()
    }

    fn move_count(&self) -> u32 {
        self.inner.move_count()
    }

    fn is_done(&self) -> bool {
        self.truncated || self.inner.is_done()
    }

    fn describe_action(&self, action: ActionIndex) -> String {
        self.inner.describe_action(action)
    }

    fn boxed_clone(&self) -> Box<dyn Environment> {
        Box::new(self.clone())
    }
}
