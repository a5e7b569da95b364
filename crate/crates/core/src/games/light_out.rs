//! Light Out Duel: switch off one light or two adjacent lit lights; whoever
//! switches off the last light wins.

use std::sync::Arc;

use super::{flag, make_spec, suite_text};
use crate::env::{GameEnv, GameSpec, Rules, Seat, Transition};
use crate::rng::SplitMix64;

pub const LIGHTS: usize = 7;
/// 7 single-light moves followed by 6 adjacent-pair moves.
const ACTIONS: usize = LIGHTS + LIGHTS - 1;
pub const OBS_DIM: usize = LIGHTS;

pub fn spec() -> Arc<GameSpec> {
    make_spec(
        "light-out",
        "Light Out Duel",
        suite_text!("light-out", "rules.md"),
        suite_text!("light-out", "actions.md"),
        ACTIONS,
        OBS_DIM,
        false,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LightMove {
    Off(usize),
    OffPair(usize),
}

impl LightMove {
    pub fn from_index(action: usize) -> Self {
        if action < LIGHTS {
            LightMove::Off(action)
        } else {
            LightMove::OffPair(action - LIGHTS)
        }
    }

    pub fn index(self) -> usize {
        match self {
            LightMove::Off(i) => i,
            LightMove::OffPair(i) => LIGHTS + i,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LightOut {
    lights: [bool; LIGHTS],
    mover: Seat,
}

impl Default for LightOut {
    fn default() -> Self {
        Self::with_lights([true; LIGHTS])
    }
}

impl LightOut {
    pub fn with_lights(lights: [bool; LIGHTS]) -> Self {
        Self {
            lights,
            mover: Seat::P1,
        }
    }

    pub fn lights(&self) -> [bool; LIGHTS] {
        self.lights
    }
}

pub fn env_with(lights: [bool; LIGHTS]) -> GameEnv<LightOut> {
    GameEnv::from_position(spec(), LightOut::default(), LightOut::with_lights(lights))
}

impl Rules for LightOut {
    fn reset(&mut self, _rng: &mut SplitMix64) {
        *self = Self::default();
    }

    fn to_move(&self) -> Seat {
        self.mover
    }

    fn legal_actions(&self) -> Vec<usize> {
        let singles = (0..LIGHTS).filter(|&i| self.lights[i]);
        let pairs = (0..LIGHTS - 1)
            .filter(|&i| self.lights[i] && self.lights[i + 1])
            .map(|i| LightMove::OffPair(i).index());
        singles.chain(pairs).collect()
    }

    fn play(&mut self, action: usize) -> Transition {
        match LightMove::from_index(action) {
            LightMove::Off(i) => self.lights[i] = false,
            LightMove::OffPair(i) => {
                self.lights[i] = false;
                self.lights[i + 1] = false;
            }
        }
        self.mover = self.mover.other();
        if self.lights.iter().any(|&on| on) {
            Transition::Continue
        } else {
            Transition::MoverWins
        }
    }

    fn encode(&self, out: &mut Vec<f32>) {
        out.extend(self.lights.iter().map(|&on| flag(on)));
    }

    fn describe(&self) -> String {
        let row: Vec<String> = self
            .lights
            .iter()
            .enumerate()
            .map(|(i, &on)| format!("{}:{}", i + 1, if on { "ON" } else { "off" }))
            .collect();
        format!("Lights: {}", row.join(" "))
    }

    fn action_label(&self, action: usize) -> String {
        match LightMove::from_index(action) {
            LightMove::Off(i) => format!("turn off light {}", i + 1),
            LightMove::OffPair(i) => format!("turn off lights {} and {}", i + 1, i + 2),
        }
    }
}
