mod common;

use std::io::Cursor;
use std::time::{Duration, Instant};

use arena_core::agents::external::{replay, Direction};
use arena_core::agents::{Agent, AgentError, AgentRecipe, ExternalAgent, ExternalConfig, HumanAgent, RandomAgent, Recipe};
use arena_core::env::{Environment, GameSpec};
use arena_core::games::build_capped_env;
use arena_core::harness::{play_match, run_eval, MatchOutcome, Side};
use common::{parse_transcript, record_echo_match, ECHO_AGENT};

fn echo(mode: &str) -> ExternalConfig {
    ExternalConfig::new(format!("{ECHO_AGENT} {mode}"))
}

fn reach27() -> Box<dyn Environment> {
    build_capped_env("reach27", None).unwrap()
}

#[test]
fn stored_transcript_replays_byte_identically() {
    let stored = include_str!("data/echo_reach27_transcript.txt");
    assert_eq!(record_echo_match(), stored);
    let (requests, replies) = parse_transcript(stored);
    assert_eq!(requests.len(), replies.len());
    assert_eq!(replay(&format!("{ECHO_AGENT} first"), &requests, Duration::from_secs(30)).unwrap(), replies);
}

#[test]
fn always_invalid_faults_after_one_plus_max_reprompts() {
    let env = reach27();
    let mut agent = ExternalAgent::new(echo("invalid"));
    agent.init(env.spec()).unwrap();
    let err = agent.choose(env.as_ref()).unwrap_err();
    assert_eq!(err, AgentError::Fault("no legal move after 4 attempts".into()));
    let reprompts: Vec<String> = agent
        .transcript()
        .iter()
        .filter(|(d, _)| *d == Direction::Sent)
        .skip(1)
        .map(|(_, l)| l.clone())
        .collect();
    assert_eq!(reprompts.len(), 4);
    for (i, line) in reprompts.iter().enumerate() {
        assert!(line.contains(&format!("\"reprompt\":{i}")), "{line}");
    }
}

#[test]
fn invalid_once_recovers_on_the_reprompt() {
    let env = reach27();
    let mut agent = ExternalAgent::new(echo("invalid-once"));
    agent.init(env.spec()).unwrap();
    let d = agent.choose(env.as_ref()).unwrap();
    assert_eq!((d.action.get(), d.reprompts), (0, 1));
}

#[test]
fn agent_exiting_at_init_is_a_fault_for_that_side() {
    let mut env = reach27();
    let mut exiting = ExternalAgent::new(echo("exit"));
    let r = play_match(env.as_mut(), &mut RandomAgent::new(1), &mut exiting, Side::A, 3);
    assert_eq!(r.outcome, MatchOutcome::FaultB);
    assert_eq!(r.move_count, 0);
}

#[test]
fn garbage_reply_is_a_fault() {
    let mut env = reach27();
    let mut garbage = ExternalAgent::new(echo("garbage"));
    let r = play_match(env.as_mut(), &mut garbage, &mut RandomAgent::new(1), Side::A, 3);
    assert_eq!(r.outcome, MatchOutcome::FaultA);
}

#[test]
fn silent_agent_times_out() {
    let env = reach27();
    let mut cfg = echo("silent");
    cfg.move_timeout = Duration::from_millis(300);
    cfg.max_reprompts = 0;
    let mut agent = ExternalAgent::new(cfg);
    agent.init(env.spec()).unwrap();
    let start = Instant::now();
    assert!(matches!(agent.choose(env.as_ref()), Err(AgentError::Fault(_))));
    assert!(start.elapsed() < Duration::from_secs(5));
}

#[test]
fn missing_binary_is_a_launch_error_and_an_env_error_outcome() {
    let mut env = reach27();
    let mut ghost = ExternalAgent::new(ExternalConfig::new("/nonexistent/agent-binary"));
    let r = play_match(env.as_mut(), &mut ghost, &mut RandomAgent::new(1), Side::A, 3);
    assert_eq!(r.outcome, MatchOutcome::EnvError);
    assert!(r.detail.unwrap().contains("launch failed"));
}

#[test]
fn megabyte_rulebook_is_delivered_in_one_line() {
    let spec = GameSpec {
        rulebook_text: "All work and no play.\n".repeat(50_000),
        ..reach27().spec().clone()
    };
    assert!(spec.rulebook_text.len() > 1_000_000);
    let mut agent = ExternalAgent::new(echo("first"));
    agent.init(&spec).unwrap();
    assert_eq!(agent.transcript()[1].1, r#"{"type":"ready"}"#);
}

#[test]
fn thirty_match_eval_alternates_seats_with_an_external_agent() {
    let mut env = build_capped_env("order-challenge", None).unwrap();
    let recipe = AgentRecipe {
        label: "echo".into(),
        recipe: Recipe::External(echo("first")),
    };
    let (records, report) = run_eval(env.as_mut(), &recipe, &AgentRecipe::random(), 30, 8);
    assert_eq!(records.iter().filter(|r| r.first_seat == Side::A).count(), 15);
    assert_eq!(records.iter().filter(|r| r.first_seat == Side::B).count(), 15);
    assert_eq!(report.wins + report.losses + report.draws, 30);
}

#[test]
fn human_agent_reprompts_then_accepts() {
    let env = reach27();
    let mut out = Vec::new();
    let mut human = HumanAgent::new(Cursor::new("hello\n42\n3\n"), &mut out);
    human.init(env.spec()).unwrap();
    let d = human.choose(env.as_ref()).unwrap();
    assert_eq!((d.action.get(), d.reprompts), (3, 2));
    let shown = String::from_utf8(out).unwrap();
    assert!(shown.contains("Reach 27"));
    assert!(shown.contains("Total: 0"));
}

#[test]
fn human_end_of_input_aborts_the_match() {
    let mut env = reach27();
    let mut human = HumanAgent::new(Cursor::new(""), Vec::new());
    let r = play_match(env.as_mut(), &mut human, &mut RandomAgent::new(1), Side::A, 3);
    assert_eq!(r.outcome, MatchOutcome::EnvError);
}
