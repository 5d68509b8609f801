//! Small dense feedforward networks with a reverse-mode tape.
//!
//! Every coefficient of the jump-diffusion is a scalar network fed the same
//! feature vector. A forward pass records its post-activation values on a
//! [`Tape`]; [`Network::backward_into`] replays them to produce parameter and
//! input gradients, which the Monte-Carlo engine chains through time.

mod network;
mod set;

use thiserror::Error;

pub use network::{inverse_softplus, softplus, Activation, NetGradient, NetSpec, Network, Tape};
pub use set::{ArchConfig, Head, HeadRecord, NetCheckpoint, NetworkSet, CHECKPOINT_FORMAT, CHECKPOINT_VERSION};

#[derive(Debug, Error)]
pub enum NetError {
    #[error("bad network spec: {0}")]
    BadSpec(String),
    #[error("non-finite value in network evaluation")]
    NonFinite,
    #[error("backward called on an empty tape")]
    EmptyTape,
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
