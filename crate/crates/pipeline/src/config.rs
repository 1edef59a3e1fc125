//! Run configuration, loadable from a JSON file. Missing fields take their
//! defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use ample_core::embed::SkipGramConfig;
use ample_model::optim::OptimizerKind;
use ample_model::ModelConfig;

use crate::PipelineError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    /// Train, validation and test shares.
    pub split: [f64; 3],
    pub seed: u64,
    pub optimizer: OptimizerKind,
    /// Worker threads for per-graph forward/backward within a batch.
    pub jobs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-4,
            batch_size: 64,
            max_epochs: 100,
            patience: 20,
            split: [0.8, 0.1, 0.1],
            seed: 0,
            optimizer: OptimizerKind::Adam,
            jobs: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let sum: f64 = self.split.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || self.split.iter().any(|&r| r < 0.0) {
            return Err(PipelineError::InvalidConfig(format!("split ratios {:?} must be non-negative and sum to 1", self.split)));
        }
        if self.patience > self.max_epochs {
            return Err(PipelineError::InvalidConfig(format!(
                "patience {} exceeds max_epochs {}",
                self.patience, self.max_epochs
            )));
        }
        if self.batch_size == 0 || self.jobs == 0 {
            return Err(PipelineError::InvalidConfig("batch_size and jobs must be positive".into()));
        }
        if !(self.learning_rate >= 0.0) {
            return Err(PipelineError::InvalidConfig("learning rate must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingKind {
    /// Skip-gram vectors fitted on the training split.
    #[default]
    Skipgram,
    /// Hash-seeded vectors; needs no fitting.
    Hashing,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingConfig {
    pub kind: EmbeddingKind,
    pub skipgram: SkipGramConfig,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig { kind: EmbeddingKind::Skipgram, skipgram: SkipGramConfig::default() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub train: TrainConfig,
    pub model: ModelConfig,
    pub embedding: EmbeddingConfig,
}

impl PipelineConfig {
    pub fn from_json(text: &[u8]) -> Result<Self, serde_json::Error> {
        serde_json::from_slice(text)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = crate::read_file(path)?;
        Self::from_json(&text).map_err(|e| PipelineError::Parse { path: path.to_path_buf(), message: e.to_string() })
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        self.train.validate()?;
        self.model.validate()?;
        Ok(())
    }

    /// Embedding width; always the model's hidden width.
    pub fn dim(&self) -> usize {
        self.model.eagcn.hidden
    }
}
