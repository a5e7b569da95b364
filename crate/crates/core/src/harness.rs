//! Referee loop for one match and the fixed-size evaluation protocol.

use std::panic::{catch_unwind, AssertUnwindSafe};

use serde::{Deserialize, Serialize};

use crate::agents::{Agent, AgentError, AgentRecipe, Decision};
use crate::env::{Environment, Seat, StepOutcome};
use crate::rng::{seed_for_label, SplitMix64};
use crate::stats::GameReport;

/// The two agents of a match: A is the one being evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::A => Side::B,
            Side::B => Side::A,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MatchOutcome {
    WinA,
    WinB,
    Draw,
    FaultA,
    FaultB,
    EnvError,
}

impl MatchOutcome {
    fn win(side: Side) -> Self {
        match side {
            Side::A => Self::WinA,
            Side::B => Self::WinB,
        }
    }

    fn fault(side: Side) -> Self {
        match side {
            Side::A => Self::FaultA,
            Side::B => Self::FaultB,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub game_id: String,
    pub agent_a: String,
    pub agent_b: String,
    pub first_seat: Side,
    pub moves: Vec<(Seat, usize)>,
    pub outcome: MatchOutcome,
    pub move_count: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

fn side_of(seat: Seat, first: Side) -> Side {
    match seat {
        Seat::P1 => first,
        Seat::P2 => first.other(),
    }
}

/// Play one match. `env` should carry its move cap; it is reset with `seed`.
pub fn play_match(
    env: &mut dyn Environment,
    agent_a: &mut dyn Agent,
    agent_b: &mut dyn Agent,
    first_seat: Side,
    seed: u64,
) -> MatchRecord {
    play_match_observed(env, agent_a, agent_b, first_seat, seed, &mut |_, _, _| {})
}

/// [`play_match`] that reports every accepted move (mover, decision, position after the move).
pub fn play_match_observed(
    env: &mut dyn Environment,
    agent_a: &mut dyn Agent,
    agent_b: &mut dyn Agent,
    first_seat: Side,
    seed: u64,
    on_move: &mut dyn FnMut(Seat, &Decision, &dyn Environment),
) -> MatchRecord {
    let mut record = MatchRecord {
        game_id: env.spec().id.clone(),
        agent_a: agent_a.descriptor(),
        agent_b: agent_b.descriptor(),
        first_seat,
        moves: Vec::new(),
        outcome: MatchOutcome::EnvError,
        move_count: 0,
        seed,
        detail: None,
    };
    let (outcome, detail) = referee(env, agent_a, agent_b, first_seat, seed, &mut record.moves, on_move);
    record.outcome = outcome;
    record.detail = detail;
    record.move_count = record.moves.len();
    record
}

fn agent_failure(side: Side, err: AgentError) -> (MatchOutcome, Option<String>) {
    match err {
        AgentError::Fault(msg) => (MatchOutcome::fault(side), Some(msg)),
        // A human leaving or an agent that never started is not a move the agent made.
        AgentError::Aborted => (MatchOutcome::EnvError, Some("aborted by player".into())),
        AgentError::Launch(msg) => (MatchOutcome::EnvError, Some(format!("launch failed: {msg}"))),
    }
}

fn referee(
    env: &mut dyn Environment,
    agent_a: &mut dyn Agent,
    agent_b: &mut dyn Agent,
    first_seat: Side,
    seed: u64,
    moves: &mut Vec<(Seat, usize)>,
    on_move: &mut dyn FnMut(Seat, &Decision, &dyn Environment),
) -> (MatchOutcome, Option<String>) {
    if let Err(p) = catch_unwind(AssertUnwindSafe(|| env.reset(Some(seed)))) {
        return (MatchOutcome::EnvError, Some(panic_text(p)));
    }
    let spec = env.spec().clone();
    if let Err(e) = agent_a.init(&spec) {
        return agent_failure(Side::A, e);
    }
    if let Err(e) = agent_b.init(&spec) {
        return agent_failure(Side::B, e);
    }
    if env.is_done() {
        return (MatchOutcome::EnvError, Some("game over before the first move".into()));
    }
    loop {
        let mover = env.current_player();
        let side = side_of(mover, first_seat);
        let agent: &mut dyn Agent = match side {
            Side::A => &mut *agent_a,
            Side::B => &mut *agent_b,
        };
        let decision = match agent.choose(&*env) {
            Ok(d) => d,
            Err(e) => return agent_failure(side, e),
        };
        if !env.valid_moves().contains(&decision.action) {
            return (
                MatchOutcome::fault(side),
                Some(format!("illegal move {} from {}", decision.action, agent.descriptor())),
            );
        }
        let step = catch_unwind(AssertUnwindSafe(|| env.step(decision.action)));
        let out: StepOutcome = match step {
            Ok(Ok(out)) => out,
            Ok(Err(e)) => return (MatchOutcome::EnvError, Some(e.to_string())),
            Err(p) => return (MatchOutcome::EnvError, Some(panic_text(p))),
        };
        moves.push((mover, decision.action.get()));
        on_move(mover, &decision, &*env);
        if out.truncated {
            return (MatchOutcome::Draw, None);
        }
        if out.terminated {
            let winner = if out.reward > 0.0 { side } else { side.other() };
            return (MatchOutcome::win(winner), None);
        }
    }
}

pub(crate) fn panic_text(p: Box<dyn std::any::Any + Send>) -> String {
    let msg = p
        .downcast_ref::<String>()
        .cloned()
        .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "unknown panic".into());
    format!("panic: {msg}")
}

/// Seed of match `index` in an evaluation of `game_id` under `base_seed`.
pub fn match_seed(base_seed: u64, game_id: &str, index: u64) -> u64 {
    SplitMix64::derive(seed_for_label(base_seed, game_id), index).next()
}

/// Play `n_matches` between `agent` (side A) and `opponent`; even-numbered matches
/// start with A. Agents are rebuilt for every match from seeds derived from it.
pub fn run_eval(
    env: &mut dyn Environment,
    agent: &AgentRecipe,
    opponent: &AgentRecipe,
    n_matches: usize,
    base_seed: u64,
) -> (Vec<MatchRecord>, GameReport) {
    let game_id = env.spec().id.clone();
    let records: Vec<MatchRecord> = (0..n_matches as u64)
        .map(|i| {
            let seed = match_seed(base_seed, &game_id, i);
            let mut a = agent.build(SplitMix64::derive(seed, 1).next());
            let mut b = opponent.build(SplitMix64::derive(seed, 2).next());
            let first = if i % 2 == 0 { Side::A } else { Side::B };
            play_match(env, a.as_mut(), b.as_mut(), first, seed)
        })
        .collect();
    let report = GameReport::from_records(&game_id, &agent.label, &opponent.label, &records);
    (records, report)
}
