//! Order Challenge: players take numbers from a shared pool 1..=9, and each
//! pick must be strictly larger than the mover's own previous pick. A player
//! with no legal pick on their turn loses.

use std::sync::Arc;

use super::{flag, make_spec, one_hot, suite_text};
use crate::env::{GameEnv, GameSpec, Rules, Seat, Transition};
use crate::rng::SplitMix64;

pub const MAX_NUMBER: usize = 9;
/// Pool mask (9), own last pick one-hot over 0..=9, rival last pick one-hot over 0..=9.
pub const OBS_DIM: usize = MAX_NUMBER + 2 * (MAX_NUMBER + 1);

pub fn spec() -> Arc<GameSpec> {
    make_spec(
        "order-challenge",
        "Order Challenge",
        suite_text!("order-challenge", "rules.md"),
        suite_text!("order-challenge", "actions.md"),
        MAX_NUMBER,
        OBS_DIM,
        false,
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OrderChallenge {
    pool: [bool; MAX_NUMBER],
    /// Last number picked by each seat, 0 before their first pick.
    last: [usize; 2],
    mover: Seat,
}

impl Default for OrderChallenge {
    fn default() -> Self {
        Self {
            pool: [true; MAX_NUMBER],
            last: [0, 0],
            mover: Seat::P1,
        }
    }
}

impl OrderChallenge {
    /// Position with the given pool (1-based numbers) and last picks.
    pub fn with_position(pool: &[usize], last: [usize; 2], mover: Seat) -> Self {
        let mut state = Self {
            pool: [false; MAX_NUMBER],
            last,
            mover,
        };
        for &n in pool {
            state.pool[n - 1] = true;
        }
        state
    }

    pub fn last_pick(&self, seat: Seat) -> usize {
        self.last[seat.index()]
    }

    pub fn in_pool(&self, number: usize) -> bool {
        (1..=MAX_NUMBER).contains(&number) && self.pool[number - 1]
    }
}

pub fn env_with(pool: &[usize], last: [usize; 2], mover: Seat) -> GameEnv<OrderChallenge> {
    GameEnv::from_position(spec(), OrderChallenge::default(), OrderChallenge::with_position(pool, last, mover))
}

impl Rules for OrderChallenge {
    fn reset(&mut self, _rng: &mut SplitMix64) {
        *self = Self::default();
    }

    fn to_move(&self) -> Seat {
        self.mover
    }

    fn legal_actions(&self) -> Vec<usize> {
        let floor = self.last[self.mover.index()];
        (floor..MAX_NUMBER).filter(|&i| self.pool[i]).collect()
    }

    fn is_legal(&self, action: usize) -> bool {
        action < MAX_NUMBER && self.pool[action] && action + 1 > self.last[self.mover.index()]
    }

    fn play(&mut self, action: usize) -> Transition {
        self.pool[action] = false;
        self.last[self.mover.index()] = action + 1;
        self.mover = self.mover.other();
        // A stuck opponent is picked up by the generic no-move rule.
        Transition::Continue
    }

    fn encode(&self, out: &mut Vec<f32>) {
        out.extend(self.pool.iter().map(|&p| flag(p)));
        one_hot(out, MAX_NUMBER + 1, Some(self.last[self.mover.index()]));
        one_hot(out, MAX_NUMBER + 1, Some(self.last[self.mover.other().index()]));
    }

    fn describe(&self) -> String {
        let pool: Vec<String> = (1..=MAX_NUMBER)
            .filter(|&n| self.pool[n - 1])
            .map(|n| n.to_string())
            .collect();
        let last = |seat: Seat| match self.last[seat.index()] {
            0 => "none".to_string(),
            n => n.to_string(),
        };
        format!(
            "Pool: {}\nLast pick: Player 1 = {}, Player 2 = {}",
            if pool.is_empty() { "empty".to_string() } else { pool.join(" ") },
            last(Seat::P1),
            last(Seat::P2)
        )
    }

    fn action_label(&self, action: usize) -> String {
        format!("pick {}", action + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{ActionIndex, Environment};

    #[test]
    fn picks_must_exceed_own_last_pick() {
        let env = env_with(&[1, 2, 5, 8], [4, 6], Seat::P1);
        assert_eq!(env.valid_moves(), vec![ActionIndex(4), ActionIndex(7)]);
    }

    #[test]
    fn taken_numbers_leave_the_shared_pool() {
        let mut env = crate::games::build_env("order-challenge", None).unwrap();
        env.step(ActionIndex(2)).unwrap();
        assert!(!env.valid_moves().contains(&ActionIndex(2)));
        assert_eq!(env.valid_moves().len(), 8);
    }

    #[test]
    fn opening_with_nine_strands_player_one() {
        let mut env = crate::games::build_env("order-challenge", None).unwrap();
        env.step(ActionIndex(8)).unwrap();
        // Whatever Player 2 answers, Player 1 is left without a pick.
        for a in env.valid_moves() {
            let mut probe = env.clone();
            let out = probe.step(a).unwrap();
            assert_eq!((out.reward, out.terminated), (1.0, true));
        }
    }

    #[test]
    fn observation_is_seat_relative() {
        let a = env_with(&[1, 2, 3], [4, 6], Seat::P1);
        let b = env_with(&[1, 2, 3], [6, 4], Seat::P2);
        assert_eq!(a.observation(), b.observation());
    }
}
