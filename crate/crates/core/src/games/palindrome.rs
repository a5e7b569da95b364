//! Palindrome Duel: add X or O to either end of a shared sequence. Creating a
//! palindrome of length three or more loses; placing the eleventh symbol
//! without one wins.

use std::sync::Arc;

use super::{make_spec, suite_text};
use crate::env::{GameEnv, GameSpec, Rules, Seat, Transition};
use crate::rng::SplitMix64;

pub const MAX_LEN: usize = 11;
/// Per slot one-hot (X, O) for 11 slots, then length / 11.
pub const OBS_DIM: usize = 2 * MAX_LEN + 1;

pub fn spec() -> Arc<GameSpec> {
    make_spec(
        "palindrome-duel",
        "Palindrome Duel",
        suite_text!("palindrome-duel", "rules.md"),
        suite_text!("palindrome-duel", "actions.md"),
        4,
        OBS_DIM,
        false,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    Left,
    Right,
}

/// Action `2 * symbol + end` with symbol 0 = X, 1 = O and end 0 = left, 1 = right.
pub fn decode(action: usize) -> (char, End) {
    let symbol = if action / 2 == 0 { 'X' } else { 'O' };
    let end = if action % 2 == 0 { End::Left } else { End::Right };
    (symbol, end)
}

fn is_palindrome(s: &[u8]) -> bool {
    s.iter().eq(s.iter().rev())
}

/// Whether `seq` has a palindromic run of length >= 3 that includes the symbol
/// just placed at `end`.
pub fn forms_palindrome(seq: &str, end: End) -> bool {
    let b = seq.as_bytes();
    let n = b.len();
    (3..=n).any(|k| match end {
        End::Left => is_palindrome(&b[..k]),
        End::Right => is_palindrome(&b[n - k..]),
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PalindromeDuel {
    seq: String,
    mover: Seat,
}

impl Default for PalindromeDuel {
    fn default() -> Self {
        Self::with_sequence("", Seat::P1)
    }
}

impl PalindromeDuel {
    pub fn with_sequence(seq: &str, mover: Seat) -> Self {
        Self {
            seq: seq.to_string(),
            mover,
        }
    }

    pub fn sequence(&self) -> &str {
        &self.seq
    }
}

pub fn env_with(seq: &str) -> GameEnv<PalindromeDuel> {
    GameEnv::from_position(spec(), PalindromeDuel::default(), PalindromeDuel::with_sequence(seq, Seat::P1))
}

impl Rules for PalindromeDuel {
    fn reset(&mut self, _rng: &mut SplitMix64) {
        *self = Self::default();
    }

    fn to_move(&self) -> Seat {
        self.mover
    }

    fn legal_actions(&self) -> Vec<usize> {
        if self.seq.len() >= MAX_LEN {
            Vec::new()
        } else {
            (0..4).collect()
        }
    }

    fn play(&mut self, action: usize) -> Transition {
        let (symbol, end) = decode(action);
        match end {
            End::Left => self.seq.insert(0, symbol),
            End::Right => self.seq.push(symbol),
        }
        self.mover = self.mover.other();
        if forms_palindrome(&self.seq, end) {
            Transition::MoverLoses
        } else if self.seq.len() == MAX_LEN {
            Transition::MoverWins
        } else {
            Transition::Continue
        }
    }

    fn encode(&self, out: &mut Vec<f32>) {
        let start = out.len();
        out.resize(start + 2 * MAX_LEN, 0.0);
        for (i, c) in self.seq.chars().take(MAX_LEN).enumerate() {
            let k = if c == 'X' { 0 } else { 1 };
            out[start + 2 * i + k] = 1.0;
        }
        out.push(self.seq.len() as f32 / MAX_LEN as f32);
    }

    fn describe(&self) -> String {
        let shown = if self.seq.is_empty() { "(empty)" } else { self.seq.as_str() };
        format!("Sequence: {shown} (length {} of {MAX_LEN})", self.seq.len())
    }

    fn action_label(&self, action: usize) -> String {
        let (symbol, end) = decode(action);
        let side = match end {
            End::Left => "left",
            End::Right => "right",
        };
        format!("place {symbol} on the {side} end")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{ActionIndex, Environment};

    const X_LEFT: usize = 0;
    const X_RIGHT: usize = 1;
    const O_LEFT: usize = 2;

    #[test]
    fn xox_loses() {
        let mut env = env_with("XO");
        let out = env.step(ActionIndex(X_RIGHT)).unwrap();
        assert_eq!((out.reward, out.terminated), (-1.0, true));
        assert_eq!(env.state().sequence(), "XOX");
    }

    #[test]
    fn first_symbol_continues() {
        let mut env = crate::games::build_env("palindrome-duel", None).unwrap();
        let out = env.step(ActionIndex(X_LEFT)).unwrap();
        assert!(!out.terminated);
        assert!(env.render().contains("Sequence: X"));
    }

    #[test]
    fn oxxoo_contains_oxxo() {
        // The prefix OXXO is a palindrome through the new left symbol.
        assert!(forms_palindrome("OXXOO", End::Left));
        let mut env = env_with("XXOO");
        assert_eq!(env.step(ActionIndex(O_LEFT)).unwrap().reward, -1.0);
    }

    #[test]
    fn only_runs_through_the_new_symbol_count() {
        // XOX is already present but does not touch the new right end.
        let mut env = env_with("XOXO");
        let out = env.step(ActionIndex(3)).unwrap();
        assert!(!out.terminated);
        assert_eq!(env.state().sequence(), "XOXOO");
    }

    #[test]
    fn eleventh_symbol_wins() {
        // Constructed position: no suffix of the result is a palindrome.
        let mut env = env_with("XOXOXOXOXO");
        let out = env.step(ActionIndex(3)).unwrap();
        assert_eq!((out.reward, out.terminated), (1.0, true));
    }

    #[test]
    fn no_palindrome_free_sequence_reaches_five() {
        for bits in 0u32..32 {
            let s: String = (0..5).map(|i| if bits >> i & 1 == 0 { 'X' } else { 'O' }).collect();
            let has = (0..5).any(|i| (i + 3..=5).any(|j| is_palindrome(&s.as_bytes()[i..j])));
            assert!(has, "{s}");
        }
    }
}
