//! Per-game chain: keyword, execution and timeout filters, self-play training
//! (or reuse of matching checkpoints), then opponent selection.
//!
//! Outputs under the run's output directory:
//! `checkpoints/<id>/ckpt_<t>.bin`, `checkpoints/<id>/training.txt`,
//! `checkpoints/<id>/train_log.txt`, `pipeline/report.jsonl`,
//! `pipeline/matches.jsonl` and `pipeline/summary.txt`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::agents::AgentRecipe;
use crate::config::RunConfig;
use crate::env::{wrap_move_cap, Environment};
use crate::filters::{
    execution_filter, keyword_filter, select_benchmark_opponent, timeout_filter, FilterReport, OpponentSelection,
    Stage,
};
use crate::harness::MatchRecord;
use crate::rl::checkpoint::{self, checkpoint_path, CheckpointError, CheckpointHeader};
use crate::rl::schedule::Checkpoint;
use crate::rl::train::{TrainError, TrainLogLine, TRUNCATION_FLAG_RATE};
use crate::rl::{train, HIDDEN};
use crate::rng::seed_for_label;
use crate::suite::{self, SuiteEntry};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
    #[error("training {game}: {source}")]
    Train {
        game: String,
        #[source]
        source: TrainError,
    },
    #[error("{0}")]
    Game(String),
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    fs::write(path, contents).map_err(io_err(path))
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> String {
    items
        .iter()
        .map(|x| serde_json::to_string(x).expect("records serialise") + "\n")
        .collect()
}

/// One line of `pipeline/report.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PipelineRecord {
    Filter(FilterReport),
    Selection(OpponentSelection),
}

#[derive(Debug, Clone)]
pub struct GameResult {
    pub game_id: String,
    pub reports: Vec<FilterReport>,
    pub selection: Option<OpponentSelection>,
    pub matches: Vec<MatchRecord>,
}

impl GameResult {
    pub fn eligible(&self) -> bool {
        self.reports.len() == Stage::ALL.len() && self.reports.iter().all(|r| r.passed)
    }

    pub fn failed_stage(&self) -> Option<Stage> {
        self.reports.iter().find(|r| !r.passed).map(|r| r.stage)
    }
}

pub fn effective_move_cap(entry: &SuiteEntry, cfg: &RunConfig) -> u32 {
    cfg.move_cap.unwrap_or(entry.meta.move_cap)
}

/// Fresh environment for `entry` under the configured move cap.
pub fn capped_env(entry: &SuiteEntry, cfg: &RunConfig, seed: Option<u64>) -> Result<Box<dyn Environment>, String> {
    let env = suite::instantiate(&entry.meta.id, seed).map_err(|e| e.to_string())?;
    Ok(wrap_move_cap(env, effective_move_cap(entry, cfg)))
}

pub fn training_seed(cfg: &RunConfig, game_id: &str) -> u64 {
    seed_for_label(cfg.seed, &format!("{game_id}/train"))
}

fn training_record_path(out: &Path, game_id: &str) -> PathBuf {
    out.join("checkpoints").join(game_id).join("training.txt")
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedPool {
    pub checkpoints: Vec<Checkpoint>,
    pub episodes: u64,
    pub truncated_episodes: u64,
    /// False when matching checkpoints were already on disk.
    pub trained: bool,
}

impl TrainedPool {
    pub fn truncation_rate(&self) -> f64 {
        if self.episodes == 0 {
            0.0
        } else {
            self.truncated_episodes as f64 / self.episodes as f64
        }
    }
}

fn format_log_line(l: &TrainLogLine) -> String {
    let mut s = format!("timestep={} epsilon={:.4} episodes={}", l.timestep, l.epsilon, l.episodes);
    match l.mean_episode_reward {
        Some(r) => {
            let _ = write!(s, " mean_episode_reward={r:.4}");
        }
        None => s.push_str(" mean_episode_reward=n/a"),
    }
    if let Some(u) = &l.update {
        let _ = write!(
            s,
            " loss={:.5}->{:.5} entropy={:.4} clip_fraction={:.3}",
            u.initial_loss, u.final_loss, u.entropy, u.clip_fraction
        );
    }
    s
}

/// Train `entry` from scratch and write its checkpoints, log and training record.
pub fn train_game(
    entry: &SuiteEntry,
    cfg: &RunConfig,
    on_log: &mut dyn FnMut(&str),
) -> Result<TrainedPool, PipelineError> {
    let id = &entry.meta.id;
    let env = capped_env(entry, cfg, Some(0)).map_err(PipelineError::Game)?;
    let spec = env.spec().clone();
    let seed = training_seed(cfg, id);
    let mut log = String::new();
    let out = train(env, &cfg.schedule, &cfg.ppo, seed, |l| {
        let line = format_log_line(l);
        on_log(&line);
        log.push_str(&line);
        log.push('\n');
    })
    .map_err(|source| PipelineError::Train {
        game: id.clone(),
        source,
    })?;
    for c in out.pool.entries() {
        let header = CheckpointHeader {
            game_id: id.clone(),
            obs_dim: spec.observation_dim,
            n_actions: spec.action_space_size,
            hidden: [HIDDEN, HIDDEN],
            timestep: c.timestep,
            seed,
        };
        checkpoint::save(&checkpoint_path(&cfg.out, id, c.timestep), &header, &c.params)?;
    }
    write_file(&cfg.out.join("checkpoints").join(id).join("train_log.txt"), log)?;
    let record = format!(
        "{}episodes = {}\ntruncated_episodes = {}\n",
        cfg.training_text(),
        out.episodes,
        out.truncated_episodes
    );
    write_file(&training_record_path(&cfg.out, id), record)?;
    Ok(TrainedPool {
        checkpoints: out.pool.entries().to_vec(),
        episodes: out.episodes,
        truncated_episodes: out.truncated_episodes,
        trained: true,
    })
}

/// Load the checkpoints of `game_id` from `out`, checking their headers.
pub fn load_checkpoints(out: &Path, game_id: &str, timesteps: &[u64]) -> Result<Vec<Checkpoint>, PipelineError> {
    timesteps
        .iter()
        .map(|&t| {
            let (header, params) = checkpoint::load(&checkpoint_path(out, game_id, t))?;
            if header.game_id != game_id || header.timestep != t {
                return Err(PipelineError::Game(format!(
                    "checkpoint for {game_id} at {t} has header for {} at {}",
                    header.game_id, header.timestep
                )));
            }
            Ok(Checkpoint {
                timestep: t,
                params: Arc::new(params),
            })
        })
        .collect()
}

/// Reuse checkpoints written by an identical training configuration.
fn reuse(entry: &SuiteEntry, cfg: &RunConfig) -> Option<TrainedPool> {
    let id = &entry.meta.id;
    let record = fs::read_to_string(training_record_path(&cfg.out, id)).ok()?;
    let rest = record.strip_prefix(&cfg.training_text())?;
    let map = suite::parse_key_values(Path::new("training.txt"), rest).ok()?;
    let episodes = map.get("episodes")?.parse().ok()?;
    let truncated_episodes = map.get("truncated_episodes")?.parse().ok()?;
    let checkpoints = load_checkpoints(&cfg.out, id, &cfg.schedule.checkpoint_timesteps()).ok()?;
    let dims_match = checkpoints.iter().all(|c| {
        c.params.obs_dim == entry.meta.observation_dim && c.params.n_actions == entry.meta.action_space_size
    });
    dims_match.then_some(TrainedPool {
        checkpoints,
        episodes,
        truncated_episodes,
        trained: false,
    })
}

pub fn load_or_train(
    entry: &SuiteEntry,
    cfg: &RunConfig,
    on_log: &mut dyn FnMut(&str),
) -> Result<TrainedPool, PipelineError> {
    match reuse(entry, cfg) {
        Some(pool) => Ok(pool),
        None => train_game(entry, cfg, on_log),
    }
}

/// Run the whole chain for one game; a failing stage ends that game's chain.
pub fn run_game(entry: &SuiteEntry, cfg: &RunConfig) -> Result<GameResult, PipelineError> {
    let id = entry.meta.id.clone();
    let cap = effective_move_cap(entry, cfg);
    let mut result = GameResult {
        game_id: id.clone(),
        reports: Vec::new(),
        selection: None,
        matches: Vec::new(),
    };
    let make_env = || suite::instantiate(&id, None).map_err(|e| e.to_string());

    result.reports.push(keyword_filter(&id, &entry.action_map_text));
    if !result.reports[0].passed {
        return Ok(result);
    }
    let exec = execution_filter(
        &id,
        entry.meta.observation_dim,
        &make_env,
        cfg.exec_games,
        cap,
        seed_for_label(cfg.seed, &format!("{id}/execution")),
    );
    let passed = exec.passed;
    result.reports.push(exec);
    if !passed {
        return Ok(result);
    }
    let timeout = timeout_filter(
        &id,
        &make_env,
        &AgentRecipe::random(),
        &cfg.timeout_config(cap),
        seed_for_label(cfg.seed, &format!("{id}/timeout")),
    );
    let passed = timeout.passed;
    result.reports.push(timeout);
    if !passed {
        return Ok(result);
    }
    let pool = match load_or_train(entry, cfg, &mut |_| {}) {
        Ok(pool) => pool,
        Err(PipelineError::Train { source, .. }) => {
            let mut details = BTreeMap::new();
            details.insert("exception".to_string(), json!(format!("training failed: {source}")));
            result.reports.push(FilterReport {
                game_id: id,
                stage: Stage::UpperBound,
                passed: false,
                details,
            });
            return Ok(result);
        }
        Err(e) => return Err(e),
    };
    let mut ub = select_benchmark_opponent(
        &id,
        &make_env,
        cap,
        &pool.checkpoints,
        &cfg.upper_bound_config(),
        cfg.seed,
    );
    ub.report
        .details
        .insert("training_truncation_rate".into(), json!(pool.truncation_rate()));
    ub.report.details.insert(
        "training_flagged".into(),
        json!(pool.truncation_rate() > TRUNCATION_FLAG_RATE),
    );
    result.reports.push(ub.report);
    result.selection = ub.selection;
    result.matches = ub.matches;
    Ok(result)
}

/// Run every entry (games in parallel, `cfg.parallel` workers) and write the
/// pipeline outputs. Results come back in suite order.
pub fn run_pipeline(
    entries: &[SuiteEntry],
    cfg: &RunConfig,
    progress: &(dyn Fn(&GameResult) + Sync),
) -> Result<Vec<GameResult>, PipelineError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallel)
        .build()
        .map_err(|e| PipelineError::Game(e.to_string()))?;
    let results: Vec<GameResult> = pool.install(|| {
        entries
            .par_iter()
            .map(|e| {
                let r = run_game(e, cfg)?;
                progress(&r);
                Ok(r)
            })
            .collect::<Result<_, PipelineError>>()
    })?;
    let mut report = String::new();
    let mut matches = String::new();
    for r in &results {
        report.push_str(&to_jsonl(&r.reports));
        if let Some(sel) = &r.selection {
            report.push_str(&to_jsonl(std::slice::from_ref(sel)));
        }
        matches.push_str(&to_jsonl(&r.matches));
    }
    let dir = cfg.out.join("pipeline");
    write_file(&dir.join("report.jsonl"), report)?;
    write_file(&dir.join("matches.jsonl"), matches)?;
    write_file(&dir.join("summary.txt"), summary(&results))?;
    Ok(results)
}

/// Funnel counts per stage followed by one line per game.
pub fn summary(results: &[GameResult]) -> String {
    let mut s = format!("games: {}\n", results.len());
    for stage in Stage::ALL {
        let passed = results
            .iter()
            .filter(|r| r.reports.iter().any(|f| f.stage == stage && f.passed))
            .count();
        let _ = writeln!(s, "passed {}: {passed}", stage.name());
    }
    let eligible = results.iter().filter(|r| r.eligible()).count();
    let _ = writeln!(
        s,
        "eligible: {eligible} of {} (rejected {})\n",
        results.len(),
        results.len() - eligible
    );
    for r in results {
        let line = match (&r.selection, r.failed_stage()) {
            (Some(sel), _) => format!(
                "{}: eligible, opponent ckpt_{} (dominated by ckpt_{}, disparity {:.3})",
                r.game_id, sel.opponent_checkpoint, sel.dominating_checkpoint, sel.disparity
            ),
            (None, Some(stage)) => format!("{}: rejected at {}", r.game_id, stage.name()),
            (None, None) => format!("{}: incomplete", r.game_id),
        };
        s.push_str(&line);
        s.push('\n');
    }
    s
}

/// Read `pipeline/report.jsonl` back into filter reports and selections.
pub fn read_report(out: &Path) -> Result<Vec<PipelineRecord>, PipelineError> {
    let path = out.join("pipeline").join("report.jsonl");
    let file = fs::File::open(&path).map_err(io_err(&path))?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(&path))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| PipelineError::Parse {
            path: path.clone(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        records.push(rec);
    }
    Ok(records)
}

pub fn read_selections(out: &Path) -> Result<BTreeMap<String, OpponentSelection>, PipelineError> {
    Ok(read_report(out)?
        .into_iter()
        .filter_map(|r| match r {
            PipelineRecord::Selection(s) => Some((s.game_id.clone(), s)),
            PipelineRecord::Filter(_) => None,
        })
        .collect())
}
