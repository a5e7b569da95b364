//! Prime Claim: alternately claim the integers 1..=25. A prime scores its value
//! for the claimer; a composite scores its value for the claimer and gifts the
//! sum of its proper divisors to the rival; 1 scores 1. Highest total wins and
//! the player who made the last pick wins ties.

use std::sync::Arc;

use super::{flag, make_spec, suite_text};
use crate::env::{GameEnv, GameSpec, Rules, Seat, Transition};
use crate::rng::SplitMix64;

pub const MAX_NUMBER: usize = 25;
/// Unclaimed mask (25), own score / 400, rival score / 400.
pub const OBS_DIM: usize = MAX_NUMBER + 2;
const SCORE_SCALE: f32 = 400.0;

pub fn spec() -> Arc<GameSpec> {
    make_spec(
        "prime-claim",
        "Prime Claim",
        suite_text!("prime-claim", "rules.md"),
        suite_text!("prime-claim", "actions.md"),
        MAX_NUMBER,
        OBS_DIM,
        false,
    )
}

pub fn is_prime(n: u32) -> bool {
    n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

/// Sum of the divisors of `n` smaller than `n` itself.
pub fn proper_divisor_sum(n: u32) -> u32 {
    (1..n).filter(|d| n % d == 0).sum()
}

/// Points (claimer, rival) for claiming `n`.
pub fn claim_points(n: u32) -> (u32, u32) {
    if n <= 1 || is_prime(n) {
        (n, 0)
    } else {
        (n, proper_divisor_sum(n))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrimeClaim {
    unclaimed: [bool; MAX_NUMBER],
    scores: [u32; 2],
    mover: Seat,
    last_picker: Option<Seat>,
}

impl Default for PrimeClaim {
    fn default() -> Self {
        Self {
            unclaimed: [true; MAX_NUMBER],
            scores: [0, 0],
            mover: Seat::P1,
            last_picker: None,
        }
    }
}

impl PrimeClaim {
    pub fn score(&self, seat: Seat) -> u32 {
        self.scores[seat.index()]
    }

    /// Position with only `remaining` numbers unclaimed and the given scores.
    pub fn with_position(remaining: &[usize], scores: [u32; 2], mover: Seat) -> Self {
        let mut unclaimed = [false; MAX_NUMBER];
        for &n in remaining {
            unclaimed[n - 1] = true;
        }
        Self {
            unclaimed,
            scores,
            mover,
            last_picker: Some(mover.other()),
        }
    }
}

pub fn env_with(remaining: &[usize], scores: [u32; 2], mover: Seat) -> GameEnv<PrimeClaim> {
    GameEnv::from_position(spec(), PrimeClaim::default(), PrimeClaim::with_position(remaining, scores, mover))
}

impl Rules for PrimeClaim {
    fn reset(&mut self, _rng: &mut SplitMix64) {
        *self = Self::default();
    }

    fn to_move(&self) -> Seat {
        self.mover
    }

    fn legal_actions(&self) -> Vec<usize> {
        (0..MAX_NUMBER).filter(|&i| self.unclaimed[i]).collect()
    }

    fn play(&mut self, action: usize) -> Transition {
        let me = self.mover;
        let (mine, gift) = claim_points(action as u32 + 1);
        self.unclaimed[action] = false;
        self.scores[me.index()] += mine;
        self.scores[me.other().index()] += gift;
        self.last_picker = Some(me);
        self.mover = me.other();
        if self.unclaimed.iter().any(|&u| u) {
            return Transition::Continue;
        }
        let (mine, theirs) = (self.score(me), self.score(me.other()));
        // The mover made the last pick, so a tie goes to them.
        if mine >= theirs {
            Transition::MoverWins
        } else {
            Transition::MoverLoses
        }
    }

    fn encode(&self, out: &mut Vec<f32>) {
        out.extend(self.unclaimed.iter().map(|&u| flag(u)));
        out.push(self.score(self.mover) as f32 / SCORE_SCALE);
        out.push(self.score(self.mover.other()) as f32 / SCORE_SCALE);
    }

    fn describe(&self) -> String {
        let open: Vec<String> = (0..MAX_NUMBER)
            .filter(|&i| self.unclaimed[i])
            .map(|i| (i + 1).to_string())
            .collect();
        format!(
            "Unclaimed: {}\nScores: Player 1 = {}, Player 2 = {}",
            if open.is_empty() { "none".to_string() } else { open.join(" ") },
            self.scores[0],
            self.scores[1]
        )
    }

    fn action_label(&self, action: usize) -> String {
        format!("claim {}", action + 1)
    }
}
