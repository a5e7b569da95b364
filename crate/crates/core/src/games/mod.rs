//! The ten shipped games.
//!
//! Rulebooks and action maps live next to the repository root under
//! `games/<id>/` and are compiled in, so a built binary always carries the
//! same text that external agents are shown.

use std::sync::Arc;

use thiserror::Error;

use crate::env::{wrap_move_cap, Environment, GameEnv, GameSpec, Rules, DEFAULT_MOVE_CAP};

pub mod cross_over;
pub mod digit_dilemma;
pub mod divide_conquer;
pub mod isolation;
pub mod light_out;
pub mod number_duel;
pub mod order_challenge;
pub mod palindrome;
pub mod prime_claim;
pub mod reach27;

/// Ids of every shipped game, in suite order.
pub const SHIPPED_IDS: [&str; 10] = [
    "reach27",
    "light-out",
    "divide-conquer",
    "number-duel",
    "cross-over",
    "prime-claim",
    "isolation",
    "palindrome-duel",
    "order-challenge",
    "digit-dilemma",
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SuiteError {
    #[error("unknown game id `{0}`")]
    UnknownGame(String),
}

macro_rules! suite_text {
    ($id:literal, $file:literal) => {
        include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../games/", $id, "/", $file))
    };
}
pub(crate) use suite_text;

pub(crate) fn make_spec(
    id: &str,
    title: &str,
    rulebook: &str,
    actions: &str,
    action_space_size: usize,
    observation_dim: usize,
    stochastic_setup: bool,
) -> Arc<GameSpec> {
    Arc::new(GameSpec {
        id: id.to_string(),
        title: title.to_string(),
        rulebook_text: rulebook.to_string(),
        action_map_text: actions.to_string(),
        action_space_size,
        observation_dim,
        move_cap: DEFAULT_MOVE_CAP,
        stochastic_setup,
    })
}

fn boxed<R: Rules>(spec: Arc<GameSpec>, rules: R) -> Box<dyn Environment> {
    Box::new(GameEnv::new(spec, rules))
}

/// Fresh, uncapped environment for a shipped game id, reset with `seed`.
pub fn build_env(id: &str, seed: Option<u64>) -> Result<Box<dyn Environment>, SuiteError> {
    let mut env = match id {
        "reach27" => boxed(reach27::spec(), reach27::Reach27::default()),
        "light-out" => boxed(light_out::spec(), light_out::LightOut::default()),
        "divide-conquer" => boxed(divide_conquer::spec(), divide_conquer::DivideConquer::default()),
        "number-duel" => boxed(number_duel::spec(), number_duel::NumberDuel::default()),
        "cross-over" => boxed(cross_over::spec(), cross_over::CrossOver::default()),
        "prime-claim" => boxed(prime_claim::spec(), prime_claim::PrimeClaim::default()),
        "isolation" => boxed(isolation::spec(), isolation::Isolation::default()),
        "palindrome-duel" => boxed(palindrome::spec(), palindrome::PalindromeDuel::default()),
        "order-challenge" => boxed(order_challenge::spec(), order_challenge::OrderChallenge::default()),
        "digit-dilemma" => boxed(digit_dilemma::spec(), digit_dilemma::DigitDilemma::default()),
        other => return Err(SuiteError::UnknownGame(other.to_string())),
    };
    env.reset(seed);
    Ok(env)
}

/// Shipped environment wrapped in its move cap.
pub fn build_capped_env(id: &str, seed: Option<u64>) -> Result<Box<dyn Environment>, SuiteError> {
    let env = build_env(id, seed)?;
    let cap = env.spec().move_cap;
    Ok(wrap_move_cap(env, cap))
}

/// Spec of a shipped game.
pub fn shipped_spec(id: &str) -> Result<GameSpec, SuiteError> {
    build_env(id, None).map(|env| env.spec().clone())
}

pub(crate) fn one_hot(out: &mut Vec<f32>, len: usize, hot: Option<usize>) {
    let start = out.len();
    out.resize(start + len, 0.0);
    if let Some(i) = hot {
        if i < len {
            out[start + i] = 1.0;
        }
    }
}

pub(crate) fn flag(b: bool) -> f32 {
    if b {
        1.0
    } else {
        0.0
    }
}
