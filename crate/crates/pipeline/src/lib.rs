//! End-to-end vulnerability detection: corpus splitting, a synthetic
//! corpus generator, training with early stopping, evaluation and
//! statement-level explanations.
//!
//! Per graph the pipeline is: simplify (type- then variable-based merging),
//! embed node code tokens, run the edge-aware graph layers, and classify
//! with the kernel-scaled readout.

pub mod bundle;
pub mod config;
pub mod explain;
pub mod prepare;
pub mod split;
pub mod synth;
pub mod train;

pub use bundle::{Embedder, PipelineModel};
pub use config::{EmbeddingConfig, EmbeddingKind, PipelineConfig, TrainConfig};
pub use explain::{explain_statements, StatementAttribution, StatementWeight};
pub use split::split_corpus;
pub use synth::{generate_synthetic_corpus, SyntheticCorpus};
pub use train::{evaluate_model, train_model, EpochRecord, Evaluation, TrainOutcome};

use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("graph {0} has no label")]
    Unlabeled(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("loss became non-finite at epoch {epoch}, batch {batch} (loss = {loss})")]
    NonFiniteLoss { epoch: usize, batch: usize, loss: f64 },
    #[error("simplification trace does not belong to this graph: {0}")]
    UnknownTrace(String),
    #[error(transparent)]
    Model(#[from] ample_model::ModelError),
    #[error(transparent)]
    Io(#[from] ample_core::IoError),
    #[error(transparent)]
    Embed(#[from] ample_core::embed::EmbedError),
    #[error(transparent)]
    Metrics(#[from] ample_core::metrics::MetricsError),
    #[error(transparent)]
    Rules(#[from] ample_core::simplify::RuleError),
    #[error("{path}: {source}")]
    Fs {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
}

pub(crate) fn read_file(path: &std::path::Path) -> Result<Vec<u8>, PipelineError> {
    std::fs::read(path).map_err(|source| PipelineError::Fs { path: path.to_path_buf(), source })
}

pub(crate) fn write_file(path: &std::path::Path, bytes: impl AsRef<[u8]>) -> Result<(), PipelineError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|source| PipelineError::Fs { path: parent.to_path_buf(), source })?;
    }
    std::fs::write(path, bytes).map_err(|source| PipelineError::Fs { path: path.to_path_buf(), source })
}
