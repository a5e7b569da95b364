//! Players that pick moves for one seat: uniform random, trained policies
//! (raw or with rollout search), external processes and a console human.

pub mod echo;
pub mod external;
pub mod human;
pub mod protocol;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use rand::seq::SliceRandom;
use thiserror::Error;

use crate::env::{ActionIndex, Environment, GameSpec};
use crate::mcts;
use crate::rl::dist::{argmax, masked_distribution, sample};
use crate::rl::PolicyParams;
use crate::rng::SplitMix64;

pub use external::{ExternalAgent, ExternalConfig};
pub use human::HumanAgent;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgentError {
    /// The agent broke the protocol, timed out or never produced a legal move.
    #[error("agent fault: {0}")]
    Fault(String),
    /// A human asked to stop.
    #[error("aborted by player")]
    Aborted,
    /// The agent process could not be started.
    #[error("could not launch agent: {0}")]
    Launch(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decision {
    pub action: ActionIndex,
    /// Re-prompts spent before this move was accepted.
    pub reprompts: u32,
    /// Optional diagnostic shown in interactive play.
    pub note: Option<String>,
}

impl Decision {
    pub fn immediate(action: usize) -> Self {
        Self {
            action: ActionIndex(action),
            reprompts: 0,
            note: None,
        }
    }
}

pub trait Agent: Send {
    fn descriptor(&self) -> String;

    /// Called once before the first move of every match.
    fn init(&mut self, _spec: &GameSpec) -> Result<(), AgentError> {
        Ok(())
    }

    fn choose(&mut self, env: &dyn Environment) -> Result<Decision, AgentError>;
}

fn legal(env: &dyn Environment) -> Vec<usize> {
    env.valid_moves().iter().map(|a| a.get()).collect()
}

/// Uniform choice among legal moves.
pub fn choose_random(env: &dyn Environment, rng: &mut SplitMix64) -> Option<ActionIndex> {
    legal(env).choose(rng).map(|&a| ActionIndex(a))
}

pub struct RandomAgent {
    rng: SplitMix64,
}

impl RandomAgent {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: SplitMix64::new(seed),
        }
    }
}

impl Agent for RandomAgent {
    fn descriptor(&self) -> String {
        "random".into()
    }

    fn choose(&mut self, env: &dyn Environment) -> Result<Decision, AgentError> {
        choose_random(env, &mut self.rng)
            .map(|a| Decision::immediate(a.get()))
            .ok_or_else(|| AgentError::Fault("no legal moves offered".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyMode {
    Greedy,
    Sample,
}

/// Masked policy output: argmax in greedy mode, a draw in sample mode.
pub fn choose_policy(
    params: &PolicyParams<f32>,
    env: &dyn Environment,
    mode: PolicyMode,
    rng: &mut SplitMix64,
) -> Option<ActionIndex> {
    let valid = legal(env);
    let (logits, _) = params.forward(env.observation().as_slice());
    let probs = masked_distribution(&logits, &valid).ok()?;
    Some(ActionIndex(match mode {
        PolicyMode::Greedy => argmax(&probs),
        PolicyMode::Sample => sample(&probs, rng),
    }))
}

pub struct PolicyAgent {
    label: String,
    params: Arc<PolicyParams<f32>>,
    mode: PolicyMode,
    rng: SplitMix64,
}

impl PolicyAgent {
    pub fn new(label: impl Into<String>, params: Arc<PolicyParams<f32>>, mode: PolicyMode, seed: u64) -> Self {
        Self {
            label: label.into(),
            params,
            mode,
            rng: SplitMix64::new(seed),
        }
    }
}

impl Agent for PolicyAgent {
    fn descriptor(&self) -> String {
        self.label.clone()
    }

    fn choose(&mut self, env: &dyn Environment) -> Result<Decision, AgentError> {
        choose_policy(&self.params, env, self.mode, &mut self.rng)
            .map(|a| Decision::immediate(a.get()))
            .ok_or_else(|| AgentError::Fault("policy produced no legal move".into()))
    }
}

/// Policy plus rollout search; every move gets a fresh seed from the agent's stream.
pub struct MctsAgent {
    label: String,
    params: Arc<PolicyParams<f32>>,
    rollouts: usize,
    seed: u64,
    moves: u64,
}

impl MctsAgent {
    pub fn new(label: impl Into<String>, params: Arc<PolicyParams<f32>>, rollouts: usize, seed: u64) -> Self {
        Self {
            label: label.into(),
            params,
            rollouts,
            seed,
            moves: 0,
        }
    }
}

impl Agent for MctsAgent {
    fn descriptor(&self) -> String {
        self.label.clone()
    }

    fn choose(&mut self, env: &dyn Environment) -> Result<Decision, AgentError> {
        if env.valid_moves().is_empty() {
            return Err(AgentError::Fault("no legal moves offered".into()));
        }
        let seed = SplitMix64::derive(self.seed, self.moves).next();
        self.moves += 1;
        let pick = mcts::select_action(&self.params, env, self.rollouts, seed);
        let tally: Vec<String> = env
            .valid_moves()
            .iter()
            .map(|a| format!("{a}:{}/{}", pick.tally.wins[a.get()], pick.tally.visits[a.get()]))
            .collect();
        let mut note = format!("winning rollouts {}", tally.join(" "));
        if pick.fallback {
            note.push_str(" (no wins, policy favourite)");
        }
        Ok(Decision {
            note: Some(note),
            ..Decision::immediate(pick.action.get())
        })
    }
}

/// Where a policy agent's weights come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CheckpointRef {
    Path(PathBuf),
    /// Stronger checkpoint of the pair chosen by the pipeline.
    Dominating,
    /// Benchmark opponent chosen by the pipeline.
    Opponent,
}

impl fmt::Display for CheckpointRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Path(p) => write!(f, "{}", p.display()),
            Self::Dominating => f.write_str("dominating"),
            Self::Opponent => f.write_str("opponent"),
        }
    }
}

impl From<&str> for CheckpointRef {
    fn from(s: &str) -> Self {
        match s {
            "dominating" => Self::Dominating,
            "opponent" => Self::Opponent,
            path => Self::Path(PathBuf::from(path)),
        }
    }
}

/// Agent selector as written on the command line.
///
/// `random`, `policy:<ckpt>`, `mcts:<ckpt>` or `external:<command>`, where
/// `<ckpt>` is a checkpoint file or one of the words `dominating`/`opponent`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AgentSpec {
    Random,
    Policy(CheckpointRef),
    Mcts(CheckpointRef),
    External(String),
}

impl FromStr for AgentSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "random" {
            return Ok(Self::Random);
        }
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| format!("unknown agent `{s}` (expected random, policy:, mcts: or external:)"))?;
        if rest.trim().is_empty() {
            return Err(format!("agent `{s}` is missing its argument"));
        }
        match kind {
            "policy" => Ok(Self::Policy(rest.into())),
            "mcts" => Ok(Self::Mcts(rest.into())),
            "external" => Ok(Self::External(rest.to_string())),
            _ => Err(format!("unknown agent kind `{kind}`")),
        }
    }
}

impl fmt::Display for AgentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Random => f.write_str("random"),
            Self::Policy(c) => write!(f, "policy:{c}"),
            Self::Mcts(c) => write!(f, "mcts:{c}"),
            Self::External(cmd) => write!(f, "external:{cmd}"),
        }
    }
}

/// Everything needed to build fresh copies of an agent, one per match.
#[derive(Clone)]
pub enum Recipe {
    Random,
    Policy {
        params: Arc<PolicyParams<f32>>,
        mode: PolicyMode,
    },
    Mcts {
        params: Arc<PolicyParams<f32>>,
        rollouts: usize,
    },
    External(ExternalConfig),
}

#[derive(Clone)]
pub struct AgentRecipe {
    pub label: String,
    pub recipe: Recipe,
}

impl AgentRecipe {
    pub fn random() -> Self {
        Self {
            label: "random".into(),
            recipe: Recipe::Random,
        }
    }

    pub fn build(&self, seed: u64) -> Box<dyn Agent> {
        let label = self.label.clone();
        match &self.recipe {
            Recipe::Random => Box::new(RandomAgent::new(seed)),
            Recipe::Policy { params, mode } => Box::new(PolicyAgent::new(label, params.clone(), *mode, seed)),
            Recipe::Mcts { params, rollouts } => Box::new(MctsAgent::new(label, params.clone(), *rollouts, seed)),
            Recipe::External(cfg) => Box::new(ExternalAgent::new(cfg.clone())),
        }
    }
}

/// Defaults for external agents.
pub const DEFAULT_MOVE_TIMEOUT: Duration = Duration::from_secs(120);
pub const DEFAULT_MAX_REPROMPTS: u32 = 3;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::build_env;

    #[test]
    fn agent_spec_round_trips() {
        for s in ["random", "policy:dominating", "mcts:runs/x/ckpt_50000.bin", "external:bin --flag"] {
            let spec: AgentSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert_eq!("mcts:opponent".parse::<AgentSpec>().unwrap(), AgentSpec::Mcts(CheckpointRef::Opponent));
        assert!("human".parse::<AgentSpec>().is_err());
        assert!("policy:".parse::<AgentSpec>().is_err());
    }

    #[test]
    fn random_agent_only_plays_legal_moves() {
        let mut env = build_env("isolation", Some(0)).unwrap();
        let mut agent = RandomAgent::new(3);
        while !env.is_done() {
            let d = agent.choose(env.as_ref()).unwrap();
            assert!(env.valid_moves().contains(&d.action));
            env.step(d.action).unwrap();
        }
    }

    #[test]
    fn greedy_policy_is_deterministic_and_legal() {
        let env = build_env("prime-claim", Some(0)).unwrap();
        let params = Arc::new(PolicyParams::init(27, 25, &mut SplitMix64::new(1)));
        let mut a = PolicyAgent::new("p", params.clone(), PolicyMode::Greedy, 1);
        let mut b = PolicyAgent::new("p", params, PolicyMode::Greedy, 2);
        let da = a.choose(env.as_ref()).unwrap();
        assert_eq!(da, b.choose(env.as_ref()).unwrap());
        assert!(env.valid_moves().contains(&da.action));
    }
}
