//! Vulnerability detection model over code structure graphs.
//!
//! Two stages:
//!
//! - [`eagcn`]: edge-aware graph convolution. Each layer mixes per-relation
//!   neighbor means through a shared transform scaled by a learnable
//!   per-relation coefficient, then refines nodes with multi-head attention
//!   over incoming edges followed by a residual feed-forward block.
//! - [`ksr`]: kernel-scaled readout. Two 1-D convolutions with a large and
//!   a small kernel run along the node axis, each followed by batch
//!   normalization; their sum is max-pooled and classified by two dense
//!   layers and a softmax.
//!
//! Everything is `f64` with hand-written backward passes; [`gradcheck`]
//! verifies them against central finite differences.

pub mod eagcn;
pub mod gradcheck;
pub mod ksr;
pub mod model;
pub mod nn;
pub mod optim;
pub mod topology;

pub use eagcn::{EaGcnConfig, EaGcnLayerParams};
pub use ksr::{KsrConfig, KsrParams, Mode, Pooling};
pub use model::{Checkpoint, Model, ModelConfig, ModelParams};
pub use topology::GraphTopology;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("edge kind `{0}` is not one of the model's relations")]
    UnknownRelation(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}
