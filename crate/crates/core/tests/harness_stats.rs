use std::sync::Arc;

use arena_core::agents::{Agent, AgentError, AgentRecipe, Decision, PolicyMode, Recipe};
use arena_core::env::{Environment, Seat};
use arena_core::games::{build_capped_env, SHIPPED_IDS};
use arena_core::harness::{play_match_observed, run_eval, MatchOutcome, Side};
use arena_core::rl::PolicyParams;
use arena_core::rng::SplitMix64;
use arena_core::stats::{aggregate, render_table, wald_ci, GameReport};
use proptest::prelude::*;

/// Always answers with an action outside the action space.
struct OutOfRange;

impl Agent for OutOfRange {
    fn descriptor(&self) -> String {
        "out-of-range".into()
    }
    fn choose(&mut self, env: &dyn Environment) -> Result<Decision, AgentError> {
        Ok(Decision::immediate(env.spec().action_space_size + 5))
    }
}

#[test]
fn illegal_actions_fault_every_match() {
    let mut env = build_capped_env("light-out", None).unwrap();
    let mut records = Vec::new();
    for i in 0..30u64 {
        let mut bad = OutOfRange;
        let mut random = AgentRecipe::random().build(i);
        let first = if i % 2 == 0 { Side::A } else { Side::B };
        records.push(play_match_observed(env.as_mut(), &mut bad, random.as_mut(), first, i, &mut |_, _, _| {}));
    }
    let report = GameReport::from_records("light-out", "bad", "random", &records);
    assert_eq!((report.faults, report.wins), (30, 0));
    assert_eq!(report.winrate, Some(0.0));
}

#[test]
fn internal_agents_only_play_legal_moves_in_every_game() {
    for id in SHIPPED_IDS {
        let mut env = build_capped_env(id, None).unwrap();
        let spec = env.spec().clone();
        let mut rng = SplitMix64::new(1);
        let params = Arc::new(PolicyParams::<f32>::init(spec.observation_dim, spec.action_space_size, &mut rng));
        let recipes = [
            AgentRecipe::random(),
            AgentRecipe {
                label: "policy".into(),
                recipe: Recipe::Policy {
                    params: params.clone(),
                    mode: PolicyMode::Sample,
                },
            },
            AgentRecipe {
                label: "mcts".into(),
                recipe: Recipe::Mcts { params, rollouts: 8 },
            },
        ];
        for (k, recipe) in recipes.iter().enumerate() {
            let (records, report) = run_eval(env.as_mut(), recipe, &AgentRecipe::random(), 4, k as u64);
            assert_eq!(report.faults + report.env_errors, 0, "{id} {}: {records:?}", recipe.label);
            for r in &records {
                assert!(r.moves.iter().all(|&(_, a)| a < spec.action_space_size));
                assert!(r.move_count <= spec.move_cap as usize);
            }
        }
    }
}

#[test]
fn moves_alternate_and_start_with_player_one() {
    let mut env = build_capped_env("prime-claim", None).unwrap();
    let mut a = AgentRecipe::random().build(1);
    let mut b = AgentRecipe::random().build(2);
    let mut seen = Vec::new();
    let r = play_match_observed(env.as_mut(), a.as_mut(), b.as_mut(), Side::B, 4, &mut |seat, _, _| seen.push(seat));
    assert_eq!(seen.len(), r.move_count);
    for (i, seat) in seen.iter().enumerate() {
        assert_eq!(*seat, if i % 2 == 0 { Seat::P1 } else { Seat::P2 });
    }
}

#[test]
fn random_self_play_is_near_even() {
    let mut env = build_capped_env("light-out", None).unwrap();
    let (_, report) = run_eval(env.as_mut(), &AgentRecipe::random(), &AgentRecipe::random(), 400, 12);
    let w = report.winrate.unwrap();
    // Seats alternate, so any first-player edge cancels out.
    assert!((w - 0.5).abs() < 0.1, "winrate {w}");
}

#[test]
fn table_for_one_game_omits_the_interval() {
    let mut env = build_capped_env("reach27", None).unwrap();
    let (_, report) = run_eval(env.as_mut(), &AgentRecipe::random(), &AgentRecipe::random(), 10, 3);
    let table = render_table(&[report]);
    assert!(table.contains("CI omitted"), "{table}");
    assert_eq!(render_table(&[]), "no matches\n");
}

#[test]
fn every_outcome_lands_in_exactly_one_bucket() {
    let mut env = build_capped_env("cross-over", None).unwrap();
    let (records, report) = run_eval(env.as_mut(), &AgentRecipe::random(), &AgentRecipe::random(), 20, 6);
    assert_eq!(report.wins + report.losses + report.draws + report.faults + report.env_errors, 20);
    let a_wins = records.iter().filter(|r| r.outcome == MatchOutcome::WinA).count() as u64;
    assert_eq!(a_wins, report.wins);
}

proptest! {
    #[test]
    fn wald_interval_stays_in_range(n in 1u64..500, frac in 0.0f64..=1.0) {
        let wins = (frac * n as f64).floor() as u64;
        let (p, h) = wald_ci(wins, n);
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(h >= 0.0 && h <= 1.96 * 0.5 / (n as f64).sqrt() + 1e-12);
    }

    #[test]
    fn aggregate_mean_is_within_the_inputs(rates in prop::collection::vec(0.0f64..=1.0, 1..12)) {
        let (m, h) = aggregate(&rates).unwrap();
        let lo = rates.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = rates.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(m >= lo - 1e-12 && m <= hi + 1e-12);
        prop_assert_eq!(h.is_some(), rates.len() >= 2);
    }
}
