//! Self-play policy-gradient training of benchmark opponents.

pub mod checkpoint;
pub mod dist;
pub mod gae;
pub mod network;
pub mod ppo;
pub mod schedule;
pub mod train;

pub use network::{PolicyParams, HIDDEN};
pub use ppo::PpoConfig;
pub use schedule::{CheckpointPool, TrainingSchedule};
pub use train::{train, TrainOutput};
