//! Run configuration: profile defaults, a `key = value` file and command-line
//! overrides, applied in that order.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use thiserror::Error;

use crate::filters::{TimeoutConfig, UpperBoundConfig, DEFAULT_EXECUTION_GAMES};
use crate::mcts::DEFAULT_ROLLOUTS;
use crate::rl::{PpoConfig, TrainingSchedule};
use crate::suite::parse_key_values;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    Paper,
    Desk,
}

impl Profile {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "paper" => Some(Self::Paper),
            "desk" => Some(Self::Desk),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Paper => "paper",
            Self::Desk => "desk",
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: `{value}`")]
    BadValue { key: String, value: String },
    #[error("`{0}` cannot be changed under `--profile paper`; use --profile desk")]
    Fixed(String),
    #[error("{0}")]
    Invalid(String),
    #[error("config file {0}")]
    File(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub suite: PathBuf,
    pub out: PathBuf,
    pub seed: u64,
    pub profile: Profile,
    pub schedule: TrainingSchedule,
    pub ppo: PpoConfig,
    /// Overrides every game's own move cap when set.
    pub move_cap: Option<u32>,
    pub mcts_rollouts: usize,
    pub n_eval_matches: usize,
    pub max_reprompts: u32,
    pub move_timeout_secs: f64,
    pub parallel: usize,
    pub exec_games: usize,
    pub timeout_games: usize,
    pub wall_budget_secs: f64,
    pub selection_matches: usize,
    pub selection_threshold: f64,
    pub selection_use_mcts: bool,
}

const FIXED_BY_PAPER: [&str; 3] = ["total_timesteps", "checkpoint_interval", "move_cap"];

impl RunConfig {
    pub fn for_profile(profile: Profile) -> Self {
        Self {
            suite: PathBuf::from("games"),
            out: PathBuf::from("arena-out"),
            seed: 0,
            profile,
            schedule: match profile {
                Profile::Paper => TrainingSchedule::paper(),
                Profile::Desk => TrainingSchedule::desk(),
            },
            ppo: PpoConfig::default(),
            move_cap: None,
            mcts_rollouts: DEFAULT_ROLLOUTS,
            n_eval_matches: 30,
            max_reprompts: crate::agents::DEFAULT_MAX_REPROMPTS,
            move_timeout_secs: crate::agents::DEFAULT_MOVE_TIMEOUT.as_secs_f64(),
            parallel: 1,
            exec_games: DEFAULT_EXECUTION_GAMES,
            timeout_games: TimeoutConfig::default().n_games,
            wall_budget_secs: TimeoutConfig::default().wall_budget_per_game.as_secs_f64(),
            selection_matches: UpperBoundConfig::default().matches_per_pair,
            selection_threshold: UpperBoundConfig::default().threshold,
            selection_use_mcts: true,
        }
    }

    /// Defaults of the chosen profile, then `file` entries, then `overrides`.
    /// The profile itself is taken from the last layer that names one.
    pub fn layered(file: Option<(&Path, &str)>, overrides: &[(String, String)]) -> Result<Self, ConfigError> {
        let file_entries: Vec<(String, String)> = match file {
            Some((path, text)) => parse_key_values(path, text)
                .map_err(|e| ConfigError::File(e.to_string()))?
                .into_iter()
                .collect(),
            None => Vec::new(),
        };
        let profile_value = overrides
            .iter()
            .chain(&file_entries)
            .find(|(k, _)| k == "profile")
            .map(|(_, v)| v.clone());
        let profile = match profile_value {
            Some(v) => Profile::parse(&v).ok_or(ConfigError::BadValue {
                key: "profile".into(),
                value: v,
            })?,
            None => Profile::Paper,
        };
        let mut cfg = Self::for_profile(profile);
        for (k, v) in file_entries.iter().chain(overrides) {
            if k != "profile" {
                cfg.set(k, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = || ConfigError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
        };
        fn num<T: std::str::FromStr>(v: &str, bad: impl Fn() -> ConfigError) -> Result<T, ConfigError> {
            v.trim().parse().map_err(|_| bad())
        }
        if self.profile == Profile::Paper && FIXED_BY_PAPER.contains(&key) {
            let unchanged = match key {
                "total_timesteps" => num::<u64>(value, bad)? == self.schedule.total_timesteps,
                "checkpoint_interval" => num::<u64>(value, bad)? == self.schedule.checkpoint_interval,
                _ => num::<u32>(value, bad)? == crate::env::DEFAULT_MOVE_CAP,
            };
            return if unchanged { Ok(()) } else { Err(ConfigError::Fixed(key.to_string())) };
        }
        match key {
            "suite" => self.suite = PathBuf::from(value),
            "out" => self.out = PathBuf::from(value),
            "seed" => self.seed = num(value, bad)?,
            "profile" => return Err(ConfigError::Invalid("profile must be chosen before other keys".into())),
            "total_timesteps" => self.schedule.total_timesteps = num(value, bad)?,
            "checkpoint_interval" => self.schedule.checkpoint_interval = num(value, bad)?,
            "epsilon_start" => self.schedule.epsilon_start = num(value, bad)?,
            "epsilon_end" => self.schedule.epsilon_end = num(value, bad)?,
            "learning_rate" => self.ppo.learning_rate = num(value, bad)?,
            "gamma" => self.ppo.gamma = num(value, bad)?,
            "gae_lambda" => self.ppo.gae_lambda = num(value, bad)?,
            "clip_range" => self.ppo.clip_range = num(value, bad)?,
            "batch_size" => self.ppo.batch_size = num(value, bad)?,
            "rollout_length" => self.ppo.rollout_length = num(value, bad)?,
            "epochs" => self.ppo.epochs = num(value, bad)?,
            "value_coef" => self.ppo.value_coef = num(value, bad)?,
            "entropy_coef" => self.ppo.entropy_coef = num(value, bad)?,
            "max_grad_norm" => self.ppo.max_grad_norm = num(value, bad)?,
            "normalize_advantages" => self.ppo.normalize_advantages = num(value, bad)?,
            "adam_eps" => self.ppo.adam_eps = num(value, bad)?,
            "move_cap" => self.move_cap = Some(num(value, bad)?),
            "mcts_rollouts" => self.mcts_rollouts = num(value, bad)?,
            "n_eval_matches" => self.n_eval_matches = num(value, bad)?,
            "max_reprompts" => self.max_reprompts = num(value, bad)?,
            "move_timeout_secs" => self.move_timeout_secs = num(value, bad)?,
            "parallel" => self.parallel = num(value, bad)?,
            "exec_games" => self.exec_games = num(value, bad)?,
            "timeout_games" => self.timeout_games = num(value, bad)?,
            "wall_budget_secs" => self.wall_budget_secs = num(value, bad)?,
            "selection_matches" => self.selection_matches = num(value, bad)?,
            "selection_threshold" => self.selection_threshold = num(value, bad)?,
            "selection_use_mcts" => self.selection_use_mcts = num(value, bad)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.schedule.validate().map_err(ConfigError::Invalid)?;
        self.ppo.validate().map_err(ConfigError::Invalid)?;
        let positive = [
            ("mcts_rollouts", self.mcts_rollouts),
            ("n_eval_matches", self.n_eval_matches),
            ("parallel", self.parallel),
            ("timeout_games", self.timeout_games),
            ("selection_matches", self.selection_matches),
            ("move_cap", self.move_cap.unwrap_or(1) as usize),
        ];
        if let Some((k, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(ConfigError::Invalid(format!("{k} must be positive")));
        }
        if !(self.move_timeout_secs > 0.0 && self.wall_budget_secs > 0.0) {
            return Err(ConfigError::Invalid("time limits must be positive".into()));
        }
        Ok(())
    }

    pub fn move_timeout(&self) -> Duration {
        Duration::from_secs_f64(self.move_timeout_secs)
    }

    pub fn timeout_config(&self, game_move_cap: u32) -> TimeoutConfig {
        TimeoutConfig {
            n_games: self.timeout_games,
            move_cap: self.move_cap.unwrap_or(game_move_cap),
            wall_budget_per_game: Duration::from_secs_f64(self.wall_budget_secs),
            ..TimeoutConfig::default()
        }
    }

    pub fn upper_bound_config(&self) -> UpperBoundConfig {
        UpperBoundConfig {
            matches_per_pair: self.selection_matches,
            threshold: self.selection_threshold,
            use_mcts: self.selection_use_mcts,
            rollouts: self.mcts_rollouts,
        }
    }

    /// Hyperparameters that determine training output, one `key = value` per line.
    pub fn training_text(&self) -> String {
        let s = &self.schedule;
        let p = &self.ppo;
        let mut t = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(t, "{k} = {v}");
        };
        line("seed", self.seed.to_string());
        line("total_timesteps", s.total_timesteps.to_string());
        line("checkpoint_interval", s.checkpoint_interval.to_string());
        line("epsilon_start", s.epsilon_start.to_string());
        line("epsilon_end", s.epsilon_end.to_string());
        line("learning_rate", p.learning_rate.to_string());
        line("gamma", p.gamma.to_string());
        line("gae_lambda", p.gae_lambda.to_string());
        line("clip_range", p.clip_range.to_string());
        line("batch_size", p.batch_size.to_string());
        line("rollout_length", p.rollout_length.to_string());
        line("epochs", p.epochs.to_string());
        line("value_coef", p.value_coef.to_string());
        line("entropy_coef", p.entropy_coef.to_string());
        line("max_grad_norm", p.max_grad_norm.to_string());
        line("normalize_advantages", p.normalize_advantages.to_string());
        line("adam_eps", p.adam_eps.to_string());
        if let Some(cap) = self.move_cap {
            line("move_cap", cap.to_string());
        }
        t
    }

    /// Effective configuration in the same format the config file uses.
    pub fn to_text(&self) -> String {
        let mut t = format!(
            "profile = {}\nsuite = {}\nout = {}\n",
            self.profile.name(),
            self.suite.display(),
            self.out.display()
        );
        t.push_str(&self.training_text());
        for (k, v) in [
            ("mcts_rollouts", self.mcts_rollouts.to_string()),
            ("n_eval_matches", self.n_eval_matches.to_string()),
            ("max_reprompts", self.max_reprompts.to_string()),
            ("move_timeout_secs", self.move_timeout_secs.to_string()),
            ("parallel", self.parallel.to_string()),
            ("exec_games", self.exec_games.to_string()),
            ("timeout_games", self.timeout_games.to_string()),
            ("wall_budget_secs", self.wall_budget_secs.to_string()),
            ("selection_matches", self.selection_matches.to_string()),
            ("selection_threshold", self.selection_threshold.to_string()),
            ("selection_use_mcts", self.selection_use_mcts.to_string()),
        ] {
            let _ = writeln!(t, "{k} = {v}");
        }
        t
    }
}
