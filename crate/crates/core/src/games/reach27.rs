//! Reach 27: add 1..9 to a shared running total; hitting exactly 27 wins and
//! overshooting loses.

use std::sync::Arc;

use super::{make_spec, one_hot, suite_text};
use crate::env::{GameEnv, GameSpec, Rules, Seat, Transition};
use crate::rng::SplitMix64;

pub const TARGET: u32 = 27;
const ACTIONS: usize = 9;
/// One-hot total (0..=26) plus total / 27.
pub const OBS_DIM: usize = 28;

pub fn spec() -> Arc<GameSpec> {
    make_spec(
        "reach27",
        "Reach 27",
        suite_text!("reach27", "rules.md"),
        suite_text!("reach27", "actions.md"),
        ACTIONS,
        OBS_DIM,
        false,
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reach27 {
    total: u32,
    mover: Seat,
}

impl Default for Reach27 {
    fn default() -> Self {
        Self::at(0)
    }
}

impl Reach27 {
    /// Position with the given total and Player 1 to move.
    pub fn at(total: u32) -> Self {
        Self {
            total,
            mover: Seat::P1,
        }
    }

    pub fn total(&self) -> u32 {
        self.total
    }
}

/// Environment positioned at `total` with Player 1 to move.
pub fn env_at(total: u32) -> GameEnv<Reach27> {
    GameEnv::from_position(spec(), Reach27::default(), Reach27::at(total))
}

impl Rules for Reach27 {
    fn reset(&mut self, _rng: &mut SplitMix64) {
        *self = Self::at(0);
    }

    fn to_move(&self) -> Seat {
        self.mover
    }

    fn legal_actions(&self) -> Vec<usize> {
        if self.total >= TARGET {
            Vec::new()
        } else {
            (0..ACTIONS).collect()
        }
    }

    fn play(&mut self, action: usize) -> Transition {
        self.total += action as u32 + 1;
        self.mover = self.mover.other();
        match self.total {
            t if t == TARGET => Transition::MoverWins,
            t if t > TARGET => Transition::MoverLoses,
            _ => Transition::Continue,
        }
    }

    fn encode(&self, out: &mut Vec<f32>) {
        let hot = (self.total < TARGET).then_some(self.total as usize);
        one_hot(out, TARGET as usize, hot);
        out.push(self.total as f32 / TARGET as f32);
    }

    fn describe(&self) -> String {
        format!("Total: {} (target {TARGET})", self.total)
    }

    fn action_label(&self, action: usize) -> String {
        format!("add {}", action + 1)
    }
}
