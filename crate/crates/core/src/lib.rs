//! Engine for benchmarking agents on two-player, turn-based strategy games.

pub mod agents;
pub mod config;
pub mod env;
pub mod filters;
pub mod fixtures;
pub mod games;
pub mod harness;
pub mod mcts;
pub mod pipeline;
pub mod rl;
pub mod rng;
pub mod solver;
pub mod stats;
pub mod suite;
