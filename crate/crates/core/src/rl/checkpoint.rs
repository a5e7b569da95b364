//! Binary checkpoint format: magic line, one JSON header line, then every
//! parameter tensor as little-endian `f32` in a fixed order.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::network::{PolicyParams, HIDDEN};

pub const MAGIC: &[u8] = b"GGCKPT1\n";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub game_id: String,
    pub obs_dim: usize,
    pub n_actions: usize,
    pub hidden: [usize; 2],
    pub timestep: u64,
    pub seed: u64,
}

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("not a checkpoint file (bad magic bytes)")]
    BadMagic,
    #[error("malformed checkpoint header: {0}")]
    Header(String),
    #[error("checkpoint payload has {found} bytes, expected {expected}")]
    Payload { found: usize, expected: usize },
}

pub fn checkpoint_path(dir: &Path, game_id: &str, timestep: u64) -> PathBuf {
    dir.join("checkpoints").join(game_id).join(format!("ckpt_{timestep}.bin"))
}

pub fn encode(header: &CheckpointHeader, params: &PolicyParams<f32>) -> Vec<u8> {
    let mut bytes = MAGIC.to_vec();
    bytes.extend(serde_json::to_vec(header).expect("header serialises"));
    bytes.push(b'\n');
    for tensor in params.tensors() {
        for v in tensor {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    bytes
}

pub fn decode(bytes: &[u8]) -> Result<(CheckpointHeader, PolicyParams<f32>), CheckpointError> {
    let rest = bytes.strip_prefix(MAGIC).ok_or(CheckpointError::BadMagic)?;
    let newline = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| CheckpointError::Header("missing header line".into()))?;
    let header: CheckpointHeader =
        serde_json::from_slice(&rest[..newline]).map_err(|e| CheckpointError::Header(e.to_string()))?;
    if header.hidden != [HIDDEN, HIDDEN] {
        return Err(CheckpointError::Header(format!("unsupported hidden sizes {:?}", header.hidden)));
    }
    let payload = &rest[newline + 1..];
    let mut params = PolicyParams::<f32>::zeros(header.obs_dim, header.n_actions);
    let expected = params.num_params() * 4;
    if payload.len() != expected {
        return Err(CheckpointError::Payload {
            found: payload.len(),
            expected,
        });
    }
    let mut floats = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]));
    for tensor in params.tensors_mut() {
        for v in tensor.iter_mut() {
            *v = floats.next().expect("length checked");
        }
    }
    Ok((header, params))
}

/// Write atomically: the file appears complete or not at all.
pub fn save(path: &Path, header: &CheckpointHeader, params: &PolicyParams<f32>) -> Result<(), CheckpointError> {
    let io = |source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let tmp = path.with_extension("bin.tmp");
    let mut file = fs::File::create(&tmp).map_err(io)?;
    file.write_all(&encode(header, params)).map_err(io)?;
    file.sync_all().map_err(io)?;
    drop(file);
    fs::rename(&tmp, path).map_err(io)
}

pub fn load(path: &Path) -> Result<(CheckpointHeader, PolicyParams<f32>), CheckpointError> {
    let bytes = fs::read(path).map_err(|source| CheckpointError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode(&bytes)
}
