//! Exhaustive negamax over any perfect-information environment.
//!
//! Positions are memoised on their rendered text, which every game produces as
//! a deterministic function of the full state including the player to move.

use std::collections::HashMap;

use crate::env::{ActionIndex, Environment};

#[derive(Debug, Default)]
pub struct Solver {
    memo: HashMap<String, i8>,
}

/// Value of a finished move for the player who made it.
fn move_value(env: &dyn Environment, action: ActionIndex, memo: &mut HashMap<String, i8>) -> i8 {
    let mut child = env.boxed_clone();
    let out = child.step(action).expect("solver stepped a finished game");
    if out.truncated {
        0
    } else if out.terminated {
        out.reward.signum() as i8
    } else if child.current_player() == env.current_player() {
        value_of(child.as_ref(), memo)
    } else {
        -value_of(child.as_ref(), memo)
    }
}

fn value_of(env: &dyn Environment, memo: &mut HashMap<String, i8>) -> i8 {
    let key = env.render();
    if let Some(&v) = memo.get(&key) {
        return v;
    }
    let mut best = -1;
    for a in env.valid_moves() {
        best = best.max(move_value(env, a, memo));
        if best == 1 {
            break;
        }
    }
    memo.insert(key, best);
    best
}

impl Solver {
    pub fn new() -> Self {
        Self::default()
    }

    /// +1 if the player to move wins with perfect play, -1 if they lose, 0 for a draw.
    pub fn value(&mut self, env: &dyn Environment) -> i8 {
        assert!(!env.is_done(), "cannot solve a finished game");
        value_of(env, &mut self.memo)
    }

    /// Moves that preserve the best achievable result for the player to move.
    pub fn best_moves(&mut self, env: &dyn Environment) -> Vec<ActionIndex> {
        let target = self.value(env);
        env.valid_moves()
            .into_iter()
            .filter(|&a| move_value(env, a, &mut self.memo) == target)
            .collect()
    }

    pub fn positions_seen(&self) -> usize {
        self.memo.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::reach27;

    #[test]
    fn one_move_from_27_is_a_win() {
        let env = reach27::env_at(20);
        let mut solver = Solver::new();
        assert_eq!(solver.value(&env), 1);
        assert_eq!(solver.best_moves(&env), vec![ActionIndex(6)]);
    }

    #[test]
    fn seventeen_is_lost_for_the_mover() {
        let mut solver = Solver::new();
        assert_eq!(solver.value(&reach27::env_at(17)), -1);
        assert_eq!(solver.value(&reach27::env_at(16)), 1);
    }
}
