//! Number Duel, played as a sequence of moves: each round the attacker commits
//! a number face down, the defender answers, and the reveal captures one of the
//! two numbers. Attack succeeds only when strictly higher; otherwise the
//! attacker's number is lost. Roles swap every round.

use std::sync::Arc;

use super::{flag, make_spec, suite_text};
use crate::env::{GameEnv, GameSpec, Rules, Seat, Transition};
use crate::rng::SplitMix64;

pub const DEFAULT_N: usize = 10;

pub fn spec() -> Arc<GameSpec> {
    spec_for(DEFAULT_N)
}

/// Spec for a duel over numbers 1..=n; the observation is `2n + 1` long.
pub fn spec_for(n: usize) -> Arc<GameSpec> {
    make_spec(
        "number-duel",
        "Number Duel",
        suite_text!("number-duel", "rules.md"),
        suite_text!("number-duel", "actions.md"),
        n,
        2 * n + 1,
        false,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Attacker,
    Defender,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NumberDuel {
    n: usize,
    /// `sets[seat][i]` is true while number `i + 1` is still held.
    sets: [Vec<bool>; 2],
    attacker: Seat,
    pending_attack: Option<usize>,
}

impl Default for NumberDuel {
    fn default() -> Self {
        Self::new(DEFAULT_N)
    }
}

impl NumberDuel {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        Self {
            n,
            sets: [vec![true; n], vec![true; n]],
            attacker: Seat::P1,
            pending_attack: None,
        }
    }

    /// Position with explicit holdings (numbers are 1-based) and P1 attacking.
    pub fn with_sets(n: usize, p1: &[usize], p2: &[usize]) -> Self {
        let mut game = Self::new(n);
        for (seat, held) in [(0, p1), (1, p2)] {
            game.sets[seat] = (1..=n).map(|k| held.contains(&k)).collect();
        }
        game
    }

    pub fn holds(&self, seat: Seat, number: usize) -> bool {
        number >= 1 && number <= self.n && self.sets[seat.index()][number - 1]
    }

    pub fn role_of_mover(&self) -> Role {
        if self.pending_attack.is_none() {
            Role::Attacker
        } else {
            Role::Defender
        }
    }

    fn held(&self, seat: Seat) -> Vec<usize> {
        (1..=self.n).filter(|&k| self.holds(seat, k)).collect()
    }
}

pub fn env_with(n: usize, p1: &[usize], p2: &[usize]) -> GameEnv<NumberDuel> {
    GameEnv::from_position(spec_for(n), NumberDuel::new(n), NumberDuel::with_sets(n, p1, p2))
}

/// Attack succeeds only when strictly higher than the defense.
pub fn resolve_round(attack: usize, defense: usize) -> bool {
    attack > defense
}

impl Rules for NumberDuel {
    fn reset(&mut self, _rng: &mut SplitMix64) {
        *self = Self::new(self.n);
    }

    fn to_move(&self) -> Seat {
        match self.pending_attack {
            None => self.attacker,
            Some(_) => self.attacker.other(),
        }
    }

    fn legal_actions(&self) -> Vec<usize> {
        let seat = self.to_move();
        (0..self.n).filter(|&i| self.sets[seat.index()][i]).collect()
    }

    fn play(&mut self, action: usize) -> Transition {
        let pick = action + 1;
        let Some(attack) = self.pending_attack else {
            self.pending_attack = Some(pick);
            return Transition::Continue;
        };
        let attacker = self.attacker;
        let defender = attacker.other();
        if resolve_round(attack, pick) {
            self.sets[defender.index()][pick - 1] = false;
        } else {
            self.sets[attacker.index()][attack - 1] = false;
        }
        self.pending_attack = None;
        // The defender who just moved attacks next round.
        self.attacker = defender;
        if self.held(defender).is_empty() {
            Transition::MoverLoses
        } else if self.held(attacker).is_empty() {
            Transition::MoverWins
        } else {
            Transition::Continue
        }
    }

    fn encode(&self, out: &mut Vec<f32>) {
        let me = self.to_move();
        out.extend(self.sets[me.index()].iter().map(|&b| flag(b)));
        out.extend(self.sets[me.other().index()].iter().map(|&b| flag(b)));
        out.push(flag(self.role_of_mover() == Role::Attacker));
    }

    fn describe(&self) -> String {
        let fmt_set = |seat: Seat| {
            let nums: Vec<String> = self.held(seat).iter().map(|k| k.to_string()).collect();
            format!("{{{}}}", nums.join(", "))
        };
        let role = match self.role_of_mover() {
            Role::Attacker => "Attacker",
            Role::Defender => "Defender",
        };
        let mut lines = vec![
            format!("Current role: {role}"),
            format!("Player 1 numbers: {}", fmt_set(Seat::P1)),
            format!("Player 2 numbers: {}", fmt_set(Seat::P2)),
        ];
        if self.pending_attack.is_some() {
            lines.push(format!("{} has committed an attack (hidden)", self.attacker));
        }
        lines.join("\n")
    }

    fn action_label(&self, action: usize) -> String {
        format!("play number {}", action + 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{ActionIndex, Environment};

    #[test]
    fn observation_length_is_two_n_plus_one() {
        let mut env = GameEnv::new(spec_for(5), NumberDuel::new(5));
        assert_eq!(env.reset(Some(0)).len(), 11);
        let env = crate::games::build_env("number-duel", None).unwrap();
        assert_eq!(env.spec().observation_dim, 21);
    }

    #[test]
    fn successful_attack_captures_defender_number() {
        let mut env = env_with(5, &[1, 2, 3, 4, 5], &[1, 2, 3, 4, 5]);
        assert!(env.render().contains("Current role: Attacker"));
        env.step(ActionIndex(2)).unwrap(); // P1 attacks with 3
        assert_eq!(env.current_player(), Seat::P2);
        assert!(env.render().contains("Current role: Defender"));
        env.step(ActionIndex(1)).unwrap(); // P2 defends with 2
        let s = env.state();
        assert!(!s.holds(Seat::P2, 2));
        assert!(s.holds(Seat::P1, 3));
        // P2 now attacks.
        assert_eq!(env.current_player(), Seat::P2);
        assert_eq!(s.role_of_mover(), Role::Attacker);
    }

    #[test]
    fn tie_captures_attacker_number() {
        let mut env = env_with(5, &[1, 2, 3, 4, 5], &[1, 2, 3, 4, 5]);
        env.step(ActionIndex(1)).unwrap();
        env.step(ActionIndex(1)).unwrap();
        assert!(!env.state().holds(Seat::P1, 2));
        assert!(env.state().holds(Seat::P2, 2));
    }

    #[test]
    fn last_numbers_tie_defender_wins() {
        let mut env = env_with(3, &[1], &[1]);
        env.step(ActionIndex(0)).unwrap();
        let out = env.step(ActionIndex(0)).unwrap();
        assert_eq!((out.reward, out.terminated), (1.0, true));
        assert_eq!(env.winner(), Some(Seat::P2));
    }

    #[test]
    fn observation_hides_pending_attack() {
        let mut a = env_with(5, &[1, 2, 3, 4, 5], &[1, 2, 3, 4, 5]);
        let mut b = a.clone();
        a.step(ActionIndex(0)).unwrap();
        b.step(ActionIndex(4)).unwrap();
        assert_eq!(a.observation(), b.observation());
        assert_eq!(a.render(), b.render());
    }

    #[test]
    fn unavailable_number_is_invalid() {
        let mut env = env_with(5, &[1, 2], &[1, 2, 3, 4, 5]);
        assert_eq!(env.step(ActionIndex(4)).unwrap().reward, -10.0);
    }
}
