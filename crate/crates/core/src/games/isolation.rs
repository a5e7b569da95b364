//! Isolation: claim squares on a 13-square line; a square is claimable only if
//! it and both neighbours are unclaimed. Leaving the opponent without a
//! claimable square wins.

use std::sync::Arc;

use super::{flag, make_spec, suite_text};
use crate::env::{GameEnv, GameSpec, Rules, Seat, Transition};
use crate::rng::SplitMix64;

pub const SQUARES: usize = 13;
/// Claimed mask followed by claimable mask.
pub const OBS_DIM: usize = 2 * SQUARES;

pub fn spec() -> Arc<GameSpec> {
    make_spec(
        "isolation",
        "Isolation",
        suite_text!("isolation", "rules.md"),
        suite_text!("isolation", "actions.md"),
        SQUARES,
        OBS_DIM,
        false,
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Isolation {
    claimed: [Option<Seat>; SQUARES],
    mover: Seat,
}

impl Default for Isolation {
    fn default() -> Self {
        Self {
            claimed: [None; SQUARES],
            mover: Seat::P1,
        }
    }
}

impl Isolation {
    pub fn claimable(&self, square: usize) -> bool {
        let lo = square.saturating_sub(1);
        let hi = (square + 1).min(SQUARES - 1);
        square < SQUARES && (lo..=hi).all(|s| self.claimed[s].is_none())
    }

    pub fn with_claimed(squares: &[usize], mover: Seat) -> Self {
        let mut game = Self {
            mover,
            ..Self::default()
        };
        for &s in squares {
            game.claimed[s] = Some(mover.other());
        }
        game
    }
}

pub fn env_with(claimed: &[usize], mover: Seat) -> GameEnv<Isolation> {
    GameEnv::from_position(spec(), Isolation::default(), Isolation::with_claimed(claimed, mover))
}

impl Rules for Isolation {
    fn reset(&mut self, _rng: &mut SplitMix64) {
        *self = Self::default();
    }

    fn to_move(&self) -> Seat {
        self.mover
    }

    fn legal_actions(&self) -> Vec<usize> {
        (0..SQUARES).filter(|&s| self.claimable(s)).collect()
    }

    fn is_legal(&self, action: usize) -> bool {
        self.claimable(action)
    }

    fn play(&mut self, action: usize) -> Transition {
        self.claimed[action] = Some(self.mover);
        self.mover = self.mover.other();
        // A blocked opponent is picked up by the generic no-move rule.
        Transition::Continue
    }

    fn encode(&self, out: &mut Vec<f32>) {
        out.extend(self.claimed.iter().map(|c| flag(c.is_some())));
        out.extend((0..SQUARES).map(|s| flag(self.claimable(s))));
    }

    fn describe(&self) -> String {
        let cells: Vec<String> = self
            .claimed
            .iter()
            .enumerate()
            .map(|(i, c)| match c {
                Some(Seat::P1) => format!("{i}:1"),
                Some(Seat::P2) => format!("{i}:2"),
                None if self.claimable(i) => format!("{i}:_"),
                None => format!("{i}:x"),
            })
            .collect();
        format!(
            "Line (1/2 = claimed by player, _ = claimable, x = blocked):\n{}",
            cells.join(" ")
        )
    }

    fn action_label(&self, action: usize) -> String {
        format!("claim square {action}")
    }
}
