//! Loading a game suite from disk: one directory per game holding `meta`,
//! `rules.md` and `actions.md`.
//!
//! `meta` is a list of `key = value` lines. Blank lines and lines starting with
//! `#` are ignored.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::env::{wrap_move_cap, Environment, DEFAULT_MOVE_CAP};
use crate::fixtures;
use crate::games::{self, SuiteError};

#[derive(Debug, Error)]
pub enum SuiteLoadError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {msg}")]
    Syntax { path: PathBuf, line: usize, msg: String },
    #[error("{path}: missing required key `{key}`")]
    MissingKey { path: PathBuf, key: &'static str },
    #[error("{path}: bad value for `{key}`: `{value}`")]
    BadValue { path: PathBuf, key: String, value: String },
    #[error("{path}: {msg}")]
    Invalid { path: PathBuf, msg: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GameMeta {
    pub id: String,
    pub title: String,
    pub action_space_size: usize,
    pub observation_dim: usize,
    pub move_cap: u32,
    pub stochastic_setup: bool,
    pub observation_encoding: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuiteEntry {
    pub dir: PathBuf,
    pub meta: GameMeta,
    pub rulebook_text: String,
    pub action_map_text: String,
}

/// Parse `key = value` lines into a map, rejecting malformed and repeated keys.
pub fn parse_key_values(path: &Path, text: &str) -> Result<BTreeMap<String, String>, SuiteLoadError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let syntax = |msg: String| SuiteLoadError::Syntax {
            path: path.to_path_buf(),
            line: i + 1,
            msg,
        };
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| syntax(format!("expected `key = value`, got `{line}`")))?;
        let key = k.trim();
        if key.is_empty() {
            return Err(syntax("empty key".into()));
        }
        if map.insert(key.to_string(), v.trim().to_string()).is_some() {
            return Err(syntax(format!("duplicate key `{key}`")));
        }
    }
    Ok(map)
}

pub fn parse_meta(path: &Path, text: &str) -> Result<GameMeta, SuiteLoadError> {
    let map = parse_key_values(path, text)?;
    let required = |key: &'static str| {
        map.get(key).cloned().ok_or(SuiteLoadError::MissingKey {
            path: path.to_path_buf(),
            key,
        })
    };
    fn number<T: std::str::FromStr>(path: &Path, key: &str, v: &str) -> Result<T, SuiteLoadError> {
        v.parse().map_err(|_| SuiteLoadError::BadValue {
            path: path.to_path_buf(),
            key: key.to_string(),
            value: v.to_string(),
        })
    }
    let meta = GameMeta {
        id: required("id")?,
        title: required("title")?,
        action_space_size: number(path, "action_space_size", &required("action_space_size")?)?,
        observation_dim: number(path, "observation_dim", &required("observation_dim")?)?,
        move_cap: match map.get("move_cap") {
            Some(v) => number(path, "move_cap", v)?,
            None => DEFAULT_MOVE_CAP,
        },
        stochastic_setup: match map.get("stochastic_setup") {
            Some(v) => number(path, "stochastic_setup", v)?,
            None => false,
        },
        observation_encoding: map.get("observation_encoding").cloned(),
    };
    let invalid = |msg: &str| SuiteLoadError::Invalid {
        path: path.to_path_buf(),
        msg: msg.to_string(),
    };
    if meta.id.is_empty() {
        return Err(invalid("id is empty"));
    }
    if meta.action_space_size == 0 || meta.observation_dim == 0 {
        return Err(invalid("action_space_size and observation_dim must be positive"));
    }
    if meta.move_cap == 0 {
        return Err(invalid("move_cap must be positive"));
    }
    Ok(meta)
}

fn read(path: PathBuf) -> Result<String, SuiteLoadError> {
    fs::read_to_string(&path).map_err(|source| SuiteLoadError::Io { path, source })
}

pub fn load_entry(dir: &Path) -> Result<SuiteEntry, SuiteLoadError> {
    let meta_path = dir.join("meta");
    let meta = parse_meta(&meta_path, &read(meta_path.clone())?)?;
    let rulebook_text = read(dir.join("rules.md"))?;
    let action_map_text = read(dir.join("actions.md"))?;
    if rulebook_text.trim().is_empty() || action_map_text.trim().is_empty() {
        return Err(SuiteLoadError::Invalid {
            path: dir.to_path_buf(),
            msg: "rules.md and actions.md must not be empty".into(),
        });
    }
    Ok(SuiteEntry {
        dir: dir.to_path_buf(),
        meta,
        rulebook_text,
        action_map_text,
    })
}

/// Every game directory under `root`, in alphabetical order of directory name.
pub fn load_suite(root: &Path) -> Result<Vec<SuiteEntry>, SuiteLoadError> {
    let io = |source| SuiteLoadError::Io {
        path: root.to_path_buf(),
        source,
    };
    let mut dirs = Vec::new();
    for item in fs::read_dir(root).map_err(io)? {
        let path = item.map_err(io)?.path();
        if path.is_dir() {
            dirs.push(path);
        }
    }
    dirs.sort();
    let entries: Vec<SuiteEntry> = dirs.iter().map(|d| load_entry(d)).collect::<Result<_, _>>()?;
    let mut seen = std::collections::BTreeSet::new();
    for e in &entries {
        if !seen.insert(e.meta.id.clone()) {
            return Err(SuiteLoadError::Invalid {
                path: e.dir.clone(),
                msg: format!("duplicate game id `{}`", e.meta.id),
            });
        }
    }
    Ok(entries)
}

/// Uncapped environment for a shipped game or a fixture, reset with `seed`.
pub fn instantiate(id: &str, seed: Option<u64>) -> Result<Box<dyn Environment>, SuiteError> {
    match games::build_env(id, seed) {
        Ok(env) => Ok(env),
        Err(e) => {
            let mut env = fixtures::build(id).ok_or(e)?;
            env.reset(seed);
            Ok(env)
        }
    }
}

impl SuiteEntry {
    /// Environment for this entry wrapped in the entry's move cap.
    pub fn instantiate(&self, seed: Option<u64>) -> Result<Box<dyn Environment>, SuiteError> {
        Ok(wrap_move_cap(instantiate(&self.meta.id, seed)?, self.meta.move_cap))
    }
}

/// Directory of the suite shipped with the crate sources.
pub fn shipped_suite_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../games")
}
