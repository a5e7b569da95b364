//! Deliberately broken games used to exercise the filter chain.
//!
//! Each fixture is reachable through [`crate::suite::instantiate`] by id and
//! can be written out as a suite directory with [`write_fixture_suite`].

use std::fs;
use std::io;
use std::path::Path;
use std::sync::Arc;

use crate::env::{
    ActionIndex, EnvError, Environment, GameEnv, GameSpec, Observation, Rules, Seat, StepOutcome, Transition,
    DEFAULT_MOVE_CAP,
};
use crate::games::reach27::{self, Reach27};
use crate::rng::SplitMix64;

pub const KEYWORD: &str = "fixture-keyword";
pub const WRONG_OBS: &str = "fixture-wrong-obs";
pub const STEP_ERROR: &str = "fixture-step-error";
pub const NEVER_ENDING: &str = "fixture-never-ending";
pub const FLAKY_2: &str = "fixture-flaky-2";
pub const FLAKY_3: &str = "fixture-flaky-3";

pub const FIXTURE_IDS: [&str; 6] = [KEYWORD, WRONG_OBS, STEP_ERROR, NEVER_ENDING, FLAKY_2, FLAKY_3];

/// Observation length the wrong-obs fixture claims; it really produces 28.
pub const WRONG_OBS_DECLARED: usize = 30;

fn reach27_spec(id: &str, title: &str) -> GameSpec {
    GameSpec {
        id: id.to_string(),
        title: title.to_string(),
        ..(*reach27::spec()).clone()
    }
}

fn spec_of(id: &str) -> Option<GameSpec> {
    Some(match id {
        KEYWORD => GameSpec {
            action_map_text: "Action i adds i + 1 to the total. There are 2**n ways to reach any total.\n".into(),
            ..reach27_spec(id, "Keyword Fixture")
        },
        WRONG_OBS => GameSpec {
            observation_dim: WRONG_OBS_DECLARED,
            ..reach27_spec(id, "Wrong Observation Fixture")
        },
        STEP_ERROR => reach27_spec(id, "Step Error Fixture"),
        NEVER_ENDING => GameSpec {
            id: id.to_string(),
            title: "Never Ending Fixture".into(),
            rulebook_text: "Players take turns pressing one of two buttons. Nobody ever wins.\n".into(),
            action_map_text: "0: press the left button\n1: press the right button\n".into(),
            action_space_size: 2,
            observation_dim: 2,
            move_cap: DEFAULT_MOVE_CAP,
            stochastic_setup: false,
        },
        FLAKY_2 => reach27_spec(id, "Flaky Fixture (2 in 10)"),
        FLAKY_3 => reach27_spec(id, "Flaky Fixture (3 in 10)"),
        _ => return None,
    })
}

/// Build a fixture environment, or `None` for an unknown id.
pub fn build(id: &str) -> Option<Box<dyn Environment>> {
    let spec = Arc::new(spec_of(id)?);
    let reach = || Box::new(GameEnv::new(spec.clone(), Reach27::default())) as Box<dyn Environment>;
    Some(match id {
        KEYWORD | WRONG_OBS => reach(),
        STEP_ERROR => Box::new(Faulty {
            inner: reach(),
            mode: FaultMode::OnMove(3),
            resets: 0,
        }),
        NEVER_ENDING => Box::new(GameEnv::new(spec, Buttons { mover: Seat::P1, last: None })),
        FLAKY_2 => Box::new(Faulty {
            inner: reach(),
            mode: FaultMode::GamesPerTen(2),
            resets: 0,
        }),
        FLAKY_3 => Box::new(Faulty {
            inner: reach(),
            mode: FaultMode::GamesPerTen(3),
            resets: 0,
        }),
        _ => unreachable!("spec_of covers every fixture id"),
    })
}

#[derive(Debug, Clone, Copy)]
enum FaultMode {
    /// Every game fails on this (1-based) move.
    OnMove(u32),
    /// Game number `c` (counting resets) fails on its first move when `(c - 1) % 10 < k`.
    GamesPerTen(u64),
}

#[derive(Clone)]
struct Faulty {
    inner: Box<dyn Environment>,
    mode: FaultMode,
    resets: u64,
}

impl Environment for Faulty {
    fn spec(&self) -> &GameSpec {
        self.inner.spec()
    }

    fn reset(&mut self, seed: Option<u64>) -> Observation {
        self.resets += 1;
        self.inner.reset(seed)
    }

    fn step(&mut self, action: ActionIndex) -> Result<StepOutcome, EnvError> {
        let fail = match self.mode {
            FaultMode::OnMove(n) => self.inner.move_count() + 1 == n,
            FaultMode::GamesPerTen(k) => self.resets > 0 && (self.resets - 1) % 10 < k,
        };
        if fail {
            return Err(EnvError::Internal(format!(
                "injected failure on move {}",
                self.inner.move_count() + 1
            )));
        }
        self.inner.step(action)
    }

    fn render(&self) -> String {
        self.inner.render()
    }

    fn valid_moves(&self) -> Vec<ActionIndex> {
        self.inner.valid_moves()
    }

    fn observation(&self) -> Observation {
        self.inner.observation()
    }

    fn current_player(&self) -> Seat {
        self.inner.current_player()
    }

    fn move_count(&self) -> u32 {
        self.inner.move_count()
    }

    fn is_done(&self) -> bool {
        self.inner.is_done()
    }

    fn describe_action(&self, action: ActionIndex) -> String {
        self.inner.describe_action(action)
    }

    fn boxed_clone(&self) -> Box<dyn Environment> {
        Box::new(self.clone())
    }
}

#[derive(Debug, Clone)]
struct Buttons {
    mover: Seat,
    last: Option<usize>,
}

impl Rules for Buttons {
    fn reset(&mut self, _rng: &mut SplitMix64) {
        *self = Buttons { mover: Seat::P1, last: None };
    }

    fn to_move(&self) -> Seat {
        self.mover
    }

    fn legal_actions(&self) -> Vec<usize> {
        vec![0, 1]
    }

    fn play(&mut self, action: usize) -> Transition {
        self.last = Some(action);
        self.mover = self.mover.other();
        Transition::Continue
    }

    fn encode(&self, out: &mut Vec<f32>) {
        out.extend([0, 1].map(|b| if self.last == Some(b) { 1.0 } else { 0.0 }));
    }

    fn describe(&self) -> String {
        match self.last {
            Some(b) => format!("Last button pressed: {b}"),
            None => "No button pressed yet".into(),
        }
    }

    fn action_label(&self, action: usize) -> String {
        format!("press button {action}")
    }
}

/// Write every fixture as a suite directory (`<dir>/<id>/{meta, rules.md, actions.md}`).
pub fn write_fixture_suite(dir: &Path) -> io::Result<()> {
    for id in FIXTURE_IDS {
        let spec = spec_of(id).expect("fixture id");
        let game_dir = dir.join(id);
        fs::create_dir_all(&game_dir)?;
        fs::write(game_dir.join("rules.md"), &spec.rulebook_text)?;
        fs::write(game_dir.join("actions.md"), &spec.action_map_text)?;
        fs::write(
            game_dir.join("meta"),
            format!(
                "id = {}\ntitle = {}\naction_space_size = {}\nobservation_dim = {}\nmove_cap = {}\nstochastic_setup = {}\n",
                spec.id, spec.title, spec.action_space_size, spec.observation_dim, spec.move_cap, spec.stochastic_setup
            ),
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flaky_pattern_counts_resets() {
        let mut env = build(FLAKY_3).unwrap();
        let failed: Vec<bool> = (0..20)
            .map(|_| {
                env.reset(Some(0));
                env.step(ActionIndex(0)).is_err()
            })
            .collect();
        assert_eq!(failed.iter().filter(|&&f| f).count(), 6);
        assert!(failed[0] && failed[2] && !failed[3] && failed[10]);
    }

    #[test]
    fn step_error_on_third_move() {
        let mut env = build(STEP_ERROR).unwrap();
        env.reset(Some(0));
        env.step(ActionIndex(0)).unwrap();
        env.step(ActionIndex(0)).unwrap();
        assert!(env.step(ActionIndex(0)).is_err());
    }

    #[test]
    fn wrong_obs_mismatch() {
        let mut env = build(WRONG_OBS).unwrap();
        assert_eq!(env.reset(Some(0)).len(), 28);
        assert_eq!(env.spec().observation_dim, WRONG_OBS_DECLARED);
    }
}
