//! Cross Over: three pieces per side on an 11-cell track. Pieces advance one or
//! two cells toward the opponent; landing on an enemy piece captures it, and
//! entering the enemy's home cells or wiping out its pieces wins.

use std::sync::Arc;

use super::{make_spec, one_hot, suite_text};
use crate::env::{GameEnv, GameSpec, Rules, Seat, Transition};
use crate::rng::SplitMix64;

pub const TRACK_LEN: usize = 11;
pub const PIECES: usize = 3;
const LABELS: [char; PIECES] = ['A', 'B', 'C'];
const ACTIONS: usize = PIECES * 2;
/// Own pieces one-hot over the track (3 x 11), then enemy occupancy (11),
/// all in the mover's frame where the mover advances toward higher cells.
pub const OBS_DIM: usize = PIECES * TRACK_LEN + TRACK_LEN;

pub fn spec() -> Arc<GameSpec> {
    make_spec(
        "cross-over",
        "Cross Over",
        suite_text!("cross-over", "rules.md"),
        suite_text!("cross-over", "actions.md"),
        ACTIONS,
        OBS_DIM,
        false,
    )
}

/// True when `cell` is inside `seat`'s home territory.
pub fn in_territory(seat: Seat, cell: usize) -> bool {
    match seat {
        Seat::P1 => cell <= 2,
        Seat::P2 => cell >= 8,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CrossOver {
    /// `pieces[seat][piece]` is the piece's cell, `None` once captured.
    pieces: [[Option<usize>; PIECES]; 2],
    mover: Seat,
}

impl Default for CrossOver {
    fn default() -> Self {
        Self {
            pieces: [[Some(0), Some(1), Some(2)], [Some(10), Some(9), Some(8)]],
            mover: Seat::P1,
        }
    }
}

impl CrossOver {
    /// Arbitrary position; entries are cells or `None` for captured pieces.
    pub fn with_pieces(p1: [Option<usize>; PIECES], p2: [Option<usize>; PIECES], mover: Seat) -> Self {
        Self {
            pieces: [p1, p2],
            mover,
        }
    }

    pub fn piece(&self, seat: Seat, piece: usize) -> Option<usize> {
        self.pieces[seat.index()][piece]
    }

    fn destination(&self, piece: usize, steps: usize) -> Option<usize> {
        let seat = self.mover;
        let from = self.pieces[seat.index()][piece]?;
        let to = match seat {
            Seat::P1 => from + steps,
            Seat::P2 => from.checked_sub(steps)?,
        };
        if to >= TRACK_LEN || self.pieces[seat.index()].contains(&Some(to)) {
            return None;
        }
        Some(to)
    }

    fn frame(&self, cell: usize) -> usize {
        match self.mover {
            Seat::P1 => cell,
            Seat::P2 => TRACK_LEN - 1 - cell,
        }
    }

    fn occupant(&self, cell: usize) -> Option<(Seat, usize)> {
        for seat in [Seat::P1, Seat::P2] {
            if let Some(p) = self.pieces[seat.index()].iter().position(|&c| c == Some(cell)) {
                return Some((seat, p));
            }
        }
        None
    }
}

pub fn env_with(p1: [Option<usize>; PIECES], p2: [Option<usize>; PIECES], mover: Seat) -> GameEnv<CrossOver> {
    GameEnv::from_position(spec(), CrossOver::default(), CrossOver::with_pieces(p1, p2, mover))
}

impl Rules for CrossOver {
    fn reset(&mut self, _rng: &mut SplitMix64) {
        *self = Self::default();
    }

    fn to_move(&self) -> Seat {
        self.mover
    }

    fn legal_actions(&self) -> Vec<usize> {
        (0..ACTIONS)
            .filter(|&a| self.destination(a / 2, a % 2 + 1).is_some())
            .collect()
    }

    fn is_legal(&self, action: usize) -> bool {
        action < ACTIONS && self.destination(action / 2, action % 2 + 1).is_some()
    }

    fn play(&mut self, action: usize) -> Transition {
        let seat = self.mover;
        let enemy = seat.other();
        let piece = action / 2;
        let to = self
            .destination(piece, action % 2 + 1)
            .expect("play called with an illegal move");
        for slot in self.pieces[enemy.index()].iter_mut() {
            if *slot == Some(to) {
                *slot = None;
            }
        }
        self.pieces[seat.index()][piece] = Some(to);
        self.mover = enemy;
        let wiped_out = self.pieces[enemy.index()].iter().all(Option::is_none);
        if in_territory(enemy, to) || wiped_out {
            Transition::MoverWins
        } else {
            Transition::Continue
        }
    }

    fn encode(&self, out: &mut Vec<f32>) {
        let me = self.mover;
        for piece in 0..PIECES {
            let hot = self.pieces[me.index()][piece].map(|c| self.frame(c));
            one_hot(out, TRACK_LEN, hot);
        }
        let start = out.len();
        out.resize(start + TRACK_LEN, 0.0);
        for cell in self.pieces[me.other().index()].iter().flatten() {
            out[start + self.frame(*cell)] = 1.0;
        }
    }

    fn describe(&self) -> String {
        let cells: Vec<String> = (0..TRACK_LEN)
            .map(|c| match self.occupant(c) {
                Some((seat, p)) => format!("{c}:P{}-{}", seat.index() + 1, LABELS[p]),
                None => format!("{c}:."),
            })
            .collect();
        let roster = |seat: Seat| {
            let parts: Vec<String> = (0..PIECES)
                .map(|p| match self.pieces[seat.index()][p] {
                    Some(c) => format!("{}@{c}", LABELS[p]),
                    None => format!("{}:captured", LABELS[p]),
                })
                .collect();
            parts.join(" ")
        };
        format!(
            "Track (P1 home 0-2, neutral 3-7, P2 home 8-10):\n{}\nPlayer 1 pieces: {}\nPlayer 2 pieces: {}",
            cells.join(" "),
            roster(Seat::P1),
            roster(Seat::P2)
        )
    }

    fn action_label(&self, action: usize) -> String {
        let steps = action % 2 + 1;
        format!(
            "move piece {} {steps} step{}",
            LABELS[action / 2],
            if steps == 1 { "" } else { "s" }
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{ActionIndex, Environment};

    const A: usize = 0;
    const B: usize = 1;
    const C: usize = 2;

    fn act(piece: usize, steps: usize) -> ActionIndex {
        ActionIndex(piece * 2 + steps - 1)
    }

    #[test]
    fn opening_position() {
        let env = crate::games::build_env("cross-over", None).unwrap();
        // A is boxed in by B and C; B can only jump to 3.
        let moves = env.valid_moves();
        assert_eq!(moves, vec![act(B, 2), act(C, 1), act(C, 2)]);
    }

    #[test]
    fn landing_on_enemy_captures() {
        // P1 C at 6, P2 C at 8 moves two onto it.
        let mut env = env_with([Some(0), Some(3), Some(6)], [Some(10), Some(5), Some(8)], Seat::P2);
        let out = env.step(act(C, 2)).unwrap();
        assert!(!out.terminated);
        assert_eq!(env.state().piece(Seat::P1, C), None);
        assert_eq!(env.state().piece(Seat::P2, C), Some(6));
    }

    #[test]
    fn entering_enemy_home_wins() {
        let mut env = env_with([Some(0), Some(7), None], [Some(10), None, Some(4)], Seat::P2);
        let out = env.step(act(C, 2)).unwrap();
        assert_eq!((out.reward, out.terminated), (1.0, true));
        assert_eq!(env.winner(), Some(Seat::P2));
    }

    #[test]
    fn wiping_out_enemy_wins() {
        let mut env = env_with([None, None, Some(5)], [Some(10), Some(9), Some(6)], Seat::P2);
        let out = env.step(act(C, 1)).unwrap();
        assert_eq!(out.reward, 1.0);
        assert_eq!(env.winner(), Some(Seat::P2));
    }

    #[test]
    fn cannot_land_on_own_piece_but_may_pass_it() {
        let env = env_with([Some(3), Some(4), None], [Some(10), None, None], Seat::P1);
        let moves = env.valid_moves();
        assert!(!moves.contains(&act(A, 1)));
        assert!(moves.contains(&act(A, 2)));
    }

    #[test]
    fn mirrored_positions_encode_identically() {
        let a = env_with([Some(0), Some(3), Some(6)], [Some(10), Some(5), Some(8)], Seat::P1);
        let b = env_with([Some(0), Some(5), Some(2)], [Some(10), Some(7), Some(4)], Seat::P2);
        assert_eq!(a.observation(), b.observation());
    }
}
