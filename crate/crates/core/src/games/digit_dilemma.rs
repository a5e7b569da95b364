//! Digit Dilemma: a seeded line of 20 digits; players alternately take a digit
//! from either end and append it to their own number. After 20 picks the larger
//! 10-digit number wins and ties go to the second player.

use std::collections::VecDeque;
use std::sync::Arc;

use rand::Rng;

use super::{make_spec, suite_text};
use crate::env::{GameEnv, GameSpec, Rules, Seat, Transition};
use crate::rng::SplitMix64;

pub const LINE_LEN: usize = 20;
pub const DIGITS_EACH: usize = LINE_LEN / 2;
/// Line slots (20), own digits (10), rival digits (10); a digit d is encoded
/// as (d + 1) / 10 and an empty slot as 0.
pub const OBS_DIM: usize = LINE_LEN + 2 * DIGITS_EACH;

pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;

pub fn spec() -> Arc<GameSpec> {
    make_spec(
        "digit-dilemma",
        "Digit Dilemma",
        suite_text!("digit-dilemma", "rules.md"),
        suite_text!("digit-dilemma", "actions.md"),
        2,
        OBS_DIM,
        true,
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitDilemma {
    line: VecDeque<u8>,
    numbers: [Vec<u8>; 2],
    mover: Seat,
}

impl Default for DigitDilemma {
    fn default() -> Self {
        Self::with_position(&[0; LINE_LEN], &[], &[], Seat::P1)
    }
}

fn digits(s: &[u8]) -> String {
    s.iter().map(|d| char::from(b'0' + d)).collect()
}

impl DigitDilemma {
    pub fn with_position(line: &[u8], p1: &[u8], p2: &[u8], mover: Seat) -> Self {
        Self {
            line: line.iter().copied().collect(),
            numbers: [p1.to_vec(), p2.to_vec()],
            mover,
        }
    }

    pub fn line(&self) -> String {
        digits(&self.line.iter().copied().collect::<Vec<_>>())
    }

    pub fn number(&self, seat: Seat) -> String {
        digits(&self.numbers[seat.index()])
    }
}

pub fn env_with(line: &[u8], p1: &[u8], p2: &[u8], mover: Seat) -> GameEnv<DigitDilemma> {
    GameEnv::from_position(spec(), DigitDilemma::default(), DigitDilemma::with_position(line, p1, p2, mover))
}

impl Rules for DigitDilemma {
    fn reset(&mut self, rng: &mut SplitMix64) {
        let line: Vec<u8> = (0..LINE_LEN).map(|_| rng.gen_range(0..10u8)).collect();
        *self = Self::with_position(&line, &[], &[], Seat::P1);
    }

    fn to_move(&self) -> Seat {
        self.mover
    }

    fn legal_actions(&self) -> Vec<usize> {
        match self.line.len() {
            0 => Vec::new(),
            // Both ends are the same digit; only "left" is offered.
            1 => vec![LEFT],
            _ => vec![LEFT, RIGHT],
        }
    }

    fn play(&mut self, action: usize) -> Transition {
        let digit = if action == LEFT {
            self.line.pop_front()
        } else {
            self.line.pop_back()
        }
        .expect("play called on an empty line");
        let me = self.mover;
        self.numbers[me.index()].push(digit);
        self.mover = me.other();
        if !self.line.is_empty() {
            return Transition::Continue;
        }
        // Equal-length digit strings compare like the numbers they spell.
        let (p1, p2) = (&self.numbers[0], &self.numbers[1]);
        let winner = if p1 > p2 { Seat::P1 } else { Seat::P2 };
        if winner == me {
            Transition::MoverWins
        } else {
            Transition::MoverLoses
        }
    }

    fn encode(&self, out: &mut Vec<f32>) {
        let slot = |d: Option<&u8>| d.map_or(0.0, |&d| f32::from(d + 1) / 10.0);
        out.extend((0..LINE_LEN).map(|i| slot(self.line.get(i))));
        for seat in [self.mover, self.mover.other()] {
            let number = &self.numbers[seat.index()];
            out.extend((0..DIGITS_EACH).map(|i| slot(number.get(i))));
        }
    }

    fn describe(&self) -> String {
        let shown = |s: String| if s.is_empty() { "(none)".to_string() } else { s };
        format!(
            "Line: {}\nPlayer 1 number: {}\nPlayer 2 number: {}",
            shown(self.line()),
            shown(self.number(Seat::P1)),
            shown(self.number(Seat::P2))
        )
    }

    fn action_label(&self, action: usize) -> String {
        if action == LEFT {
            "take the leftmost digit".into()
        } else {
            "take the rightmost digit".into()
        }
    }
}
