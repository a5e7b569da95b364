//! Quality gates a game must pass before it enters the benchmark, and the
//! checkpoint tournament that picks each game's benchmark opponent.

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::agents::{choose_random, AgentRecipe, Recipe};
use crate::env::{wrap_move_cap, Environment, DEFAULT_MOVE_CAP};
use crate::harness::{panic_text, play_match, MatchOutcome, MatchRecord, Side};
use crate::mcts::DEFAULT_ROLLOUTS;
use crate::rl::schedule::Checkpoint;
use crate::rng::{seed_for_label, SplitMix64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Keyword,
    Execution,
    Timeout,
    UpperBound,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::Keyword, Stage::Execution, Stage::Timeout, Stage::UpperBound];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Keyword => "keyword",
            Stage::Execution => "execution",
            Stage::Timeout => "timeout",
            Stage::UpperBound => "upper_bound",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub game_id: String,
    pub stage: Stage,
    pub passed: bool,
    pub details: BTreeMap<String, Value>,
}

impl FilterReport {
    fn new(game_id: &str, stage: Stage, passed: bool, details: Value) -> Self {
        let details = match details {
            Value::Object(map) => map.into_iter().collect(),
            other => BTreeMap::from([("value".to_string(), other)]),
        };
        Self {
            game_id: game_id.to_string(),
            stage,
            passed,
            details,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpponentSelection {
    pub game_id: String,
    pub opponent_checkpoint: u64,
    pub dominating_checkpoint: u64,
    pub disparity: f64,
}

/// Factory for a fresh, uncapped environment.
pub type EnvFactory<'a> = &'a dyn Fn() -> Result<Box<dyn Environment>, String>;

pub const KEYWORD_PATTERN: &str = "**";

pub fn keyword_passes(action_map_text: &str) -> bool {
    !action_map_text.contains(KEYWORD_PATTERN)
}

pub fn keyword_filter(game_id: &str, action_map_text: &str) -> FilterReport {
    let passed = keyword_passes(action_map_text);
    FilterReport::new(
        game_id,
        Stage::Keyword,
        passed,
        json!({ "pattern": KEYWORD_PATTERN, "found": !passed }),
    )
}

pub const DEFAULT_EXECUTION_GAMES: usize = 100;

/// Instantiate, check the observation length against `declared_obs_dim`, check
/// rendering, then play `n_games` random-vs-random games under `move_cap`.
pub fn execution_filter(
    game_id: &str,
    declared_obs_dim: usize,
    make_env: EnvFactory,
    n_games: usize,
    move_cap: u32,
    seed: u64,
) -> FilterReport {
    let fail = |check: &str, error: String, extra: Value| {
        let mut details = json!({ "check": check, "exception": error });
        if let (Value::Object(d), Value::Object(e)) = (&mut details, extra) {
            d.extend(e);
        }
        FilterReport::new(game_id, Stage::Execution, false, details)
    };
    let env = match catch_unwind(AssertUnwindSafe(make_env)) {
        Ok(Ok(env)) => env,
        Ok(Err(e)) => return fail("instantiate", e, json!({})),
        Err(p) => return fail("instantiate", panic_text(p), json!({})),
    };
    let mut env = wrap_move_cap(env, move_cap);
    let probe = catch_unwind(AssertUnwindSafe(|| (env.reset(Some(seed)).len(), env.render())));
    let (obs_len, render) = match probe {
        Ok(v) => v,
        Err(p) => return fail("instantiate", panic_text(p), json!({})),
    };
    if obs_len != declared_obs_dim {
        return fail(
            "observation_dim",
            format!("observation has length {obs_len}, declared {declared_obs_dim}"),
            json!({ "declared_obs_dim": declared_obs_dim, "observed_obs_dim": obs_len }),
        );
    }
    if render.trim().is_empty() {
        return fail("render", "render returned empty text".into(), json!({}));
    }
    for g in 0..n_games {
        let mut rng = SplitMix64::derive(seed, g as u64);
        let played = catch_unwind(AssertUnwindSafe(|| -> Result<(), String> {
            env.reset(Some(rng.next()));
            while !env.is_done() {
                let a = choose_random(env.as_ref(), &mut rng).ok_or("running game offered no legal moves")?;
                env.step(a).map_err(|e| e.to_string())?;
                if env.render().trim().is_empty() {
                    return Err("render returned empty text".into());
                }
            }
            Ok(())
        }));
        let err = match played {
            Ok(Ok(())) => continue,
            Ok(Err(e)) => e,
            Err(p) => panic_text(p),
        };
        return fail("random_play", err, json!({ "games_played": g, "failed_game": g }));
    }
    FilterReport::new(
        game_id,
        Stage::Execution,
        true,
        json!({ "check": "all", "observed_obs_dim": obs_len, "games_played": n_games }),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeoutConfig {
    pub n_games: usize,
    pub move_cap: u32,
    pub wall_budget_per_game: Duration,
    /// Highest tolerated fraction of games that end in an engine error.
    pub max_error_rate: f64,
}

impl Default for TimeoutConfig {
    fn default() -> Self {
        Self {
            n_games: 10,
            move_cap: DEFAULT_MOVE_CAP,
            wall_budget_per_game: Duration::from_secs(60),
            max_error_rate: 0.2,
        }
    }
}

/// Probe games between two copies of `probe`. Fails when a game reaches the
/// move cap, the total wall clock exceeds the budget, or the error rate is
/// above the threshold.
pub fn timeout_filter(
    game_id: &str,
    make_env: EnvFactory,
    probe: &AgentRecipe,
    cfg: &TimeoutConfig,
    seed: u64,
) -> FilterReport {
    let budget = cfg.wall_budget_per_game * cfg.n_games as u32;
    let mut env = match catch_unwind(AssertUnwindSafe(make_env)) {
        Ok(Ok(env)) => wrap_move_cap(env, cfg.move_cap),
        Ok(Err(e)) => return FilterReport::new(game_id, Stage::Timeout, false, json!({ "exception": e })),
        Err(p) => return FilterReport::new(game_id, Stage::Timeout, false, json!({ "exception": panic_text(p) })),
    };
    let start = Instant::now();
    let (mut errors, mut capped, mut max_moves) = (0usize, 0usize, 0usize);
    for g in 0..cfg.n_games as u64 {
        let seed = SplitMix64::derive(seed, g).next();
        let mut a = probe.build(SplitMix64::derive(seed, 1).next());
        let mut b = probe.build(SplitMix64::derive(seed, 2).next());
        let r = play_match(env.as_mut(), a.as_mut(), b.as_mut(), Side::A, seed);
        max_moves = max_moves.max(r.move_count);
        match r.outcome {
            MatchOutcome::EnvError => errors += 1,
            MatchOutcome::Draw if r.move_count >= cfg.move_cap as usize => capped += 1,
            _ => {}
        }
        if start.elapsed() > budget {
            break;
        }
    }
    let within_budget = start.elapsed() <= budget;
    let error_rate = errors as f64 / cfg.n_games.max(1) as f64;
    let mut reasons = Vec::new();
    if capped > 0 {
        reasons.push("move_cap");
    }
    if !within_budget {
        reasons.push("wall_clock");
    }
    if error_rate > cfg.max_error_rate {
        reasons.push("exception_rate");
    }
    FilterReport::new(
        game_id,
        Stage::Timeout,
        reasons.is_empty(),
        json!({
            "games": cfg.n_games,
            "errors": errors,
            "exception_rate": error_rate,
            "max_exception_rate": cfg.max_error_rate,
            "max_moves": max_moves,
            "move_cap": cfg.move_cap,
            "capped_games": capped,
            "wall_clock_budget_secs": budget.as_secs_f64(),
            "within_wall_clock_budget": within_budget,
            "reasons": reasons,
        }),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpperBoundConfig {
    pub matches_per_pair: usize,
    pub threshold: f64,
    /// Rollout search for both sides; otherwise both sample from the raw policy.
    pub use_mcts: bool,
    pub rollouts: usize,
}

impl Default for UpperBoundConfig {
    fn default() -> Self {
        Self {
            matches_per_pair: 6,
            threshold: 0.8,
            use_mcts: true,
            rollouts: DEFAULT_ROLLOUTS,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpperBoundResult {
    pub report: FilterReport,
    pub selection: Option<OpponentSelection>,
    pub matches: Vec<MatchRecord>,
}

pub fn checkpoint_label(timestep: u64) -> String {
    format!("ckpt_{timestep}")
}

/// Recipe that plays a checkpoint the way the tournament does.
pub fn checkpoint_recipe(ckpt: &Checkpoint, use_mcts: bool, rollouts: usize) -> AgentRecipe {
    let params = Arc::clone(&ckpt.params);
    AgentRecipe {
        label: checkpoint_label(ckpt.timestep),
        recipe: if use_mcts {
            Recipe::Mcts { params, rollouts }
        } else {
            Recipe::Policy {
                params,
                mode: crate::agents::PolicyMode::Sample,
            }
        },
    }
}

/// Win counts of one pair; `wins[0]` belongs to the earlier checkpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairResult {
    pub i: usize,
    pub j: usize,
    pub wins: [usize; 2],
    pub draws: usize,
}

/// Choose the pair with the highest winrate disparity (first pair in
/// enumeration order on ties). Returns (pair index, winner index, loser index, disparity).
pub fn best_pair(pairs: &[PairResult], games_per_pair: usize) -> Option<(usize, usize, usize, f64)> {
    let mut best: Option<(usize, usize, usize, f64)> = None;
    for (k, p) in pairs.iter().enumerate() {
        let (winner, loser, w) = if p.wins[1] > p.wins[0] {
            (p.j, p.i, p.wins[1])
        } else {
            (p.i, p.j, p.wins[0])
        };
        let disparity = w as f64 / games_per_pair as f64;
        if best.map_or(true, |b| disparity > b.3) {
            best = Some((k, winner, loser, disparity));
        }
    }
    best
}

/// Round robin between checkpoints; half of each pair's games start with each side.
pub fn select_benchmark_opponent(
    game_id: &str,
    make_env: EnvFactory,
    move_cap: u32,
    checkpoints: &[Checkpoint],
    cfg: &UpperBoundConfig,
    seed: u64,
) -> UpperBoundResult {
    let reject = |details: Value| UpperBoundResult {
        report: FilterReport::new(game_id, Stage::UpperBound, false, details),
        selection: None,
        matches: Vec::new(),
    };
    if checkpoints.len() < 2 {
        return reject(json!({ "exception": format!("need at least 2 checkpoints, got {}", checkpoints.len()) }));
    }
    let mut env = match make_env() {
        Ok(env) => wrap_move_cap(env, move_cap),
        Err(e) => return reject(json!({ "exception": e })),
    };
    let base = seed_for_label(seed, &format!("{game_id}/upper_bound"));
    let n = checkpoints.len();
    let recipes: Vec<AgentRecipe> = checkpoints
        .iter()
        .map(|c| checkpoint_recipe(c, cfg.use_mcts, cfg.rollouts))
        .collect();
    let mut pairs = Vec::new();
    let mut matches = Vec::new();
    let mut matrix = vec![vec![0usize; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let mut pr = PairResult { i, j, wins: [0, 0], draws: 0 };
            for g in 0..cfg.matches_per_pair {
                let seed = SplitMix64::derive(base, (pairs.len() * cfg.matches_per_pair + g) as u64).next();
                let mut a = recipes[i].build(SplitMix64::derive(seed, 1).next());
                let mut b = recipes[j].build(SplitMix64::derive(seed, 2).next());
                let first = if g % 2 == 0 { Side::A } else { Side::B };
                let r = play_match(env.as_mut(), a.as_mut(), b.as_mut(), first, seed);
                match r.outcome {
                    MatchOutcome::WinA | MatchOutcome::FaultB => pr.wins[0] += 1,
                    MatchOutcome::WinB | MatchOutcome::FaultA => pr.wins[1] += 1,
                    MatchOutcome::Draw | MatchOutcome::EnvError => pr.draws += 1,
                }
                matches.push(r);
            }
            matrix[i][j] = pr.wins[0];
            matrix[j][i] = pr.wins[1];
            pairs.push(pr);
        }
    }
    let (k, winner, loser, disparity) = best_pair(&pairs, cfg.matches_per_pair).expect("at least one pair");
    let passed = disparity >= cfg.threshold;
    let timesteps: Vec<u64> = checkpoints.iter().map(|c| c.timestep).collect();
    let pair_rows: Vec<Value> = pairs
        .iter()
        .map(|p| {
            json!({
                "a": timesteps[p.i], "b": timesteps[p.j],
                "wins_a": p.wins[0], "wins_b": p.wins[1], "draws": p.draws,
            })
        })
        .collect();
    let details = json!({
        "checkpoints": timesteps,
        "matches_per_pair": cfg.matches_per_pair,
        "use_mcts": cfg.use_mcts,
        "winrate_matrix": matrix
            .iter()
            .map(|row| row.iter().map(|&w| w as f64 / cfg.matches_per_pair as f64).collect::<Vec<_>>())
            .collect::<Vec<_>>(),
        "pairs": pair_rows,
        "best_pair": [timesteps[pairs[k].i], timesteps[pairs[k].j]],
        "disparity": disparity,
        "threshold": cfg.threshold,
    });
    UpperBoundResult {
        report: FilterReport::new(game_id, Stage::UpperBound, passed, details),
        selection: passed.then(|| OpponentSelection {
            game_id: game_id.to_string(),
            opponent_checkpoint: timesteps[loser],
            dominating_checkpoint: timesteps[winner],
            disparity,
        }),
        matches,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keyword_literal_match() {
        assert!(keyword_passes("index i maps to number i+1"));
        assert!(!keyword_passes("2**n possible words"));
        assert!(keyword_passes(""));
        assert!(keyword_passes("a * b * c"));
    }

    #[test]
    fn best_pair_rules() {
        let p = |i, j, a, b| PairResult { i, j, wins: [a, b], draws: 6 - a - b };
        let pairs = [p(0, 1, 2, 3), p(0, 2, 3, 3), p(0, 3, 0, 6), p(1, 2, 3, 2), p(1, 3, 2, 4), p(2, 3, 1, 5)];
        assert_eq!(best_pair(&pairs, 6), Some((2, 3, 0, 1.0)));
        let pairs = [p(0, 1, 4, 2), p(0, 2, 2, 4)];
        let (k, _, _, d) = best_pair(&pairs, 6).unwrap();
        assert_eq!(k, 0);
        assert!(d < 0.8);
    }
}
