//! A trained pipeline in one file: model, token embeddings, merge rules and
//! the configuration it was trained with.

use std::path::Path;

use serde::{Deserialize, Serialize};

use ample_core::embed::{HashingEmbedder, TokenEmbedder, TokenEmbeddingTable};
use ample_core::simplify::MergeRule;
use ample_core::MergeRuleTable;
use ample_model::{Checkpoint, Model};

use crate::config::PipelineConfig;
use crate::PipelineError;

pub const BUNDLE_FORMAT: &str = "ample-pipeline/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Embedder {
    Skipgram { table: TokenEmbeddingTable },
    Hashing { d: usize, salt: u64 },
}

impl Embedder {
    fn hashing(&self) -> Option<HashingEmbedder> {
        match self {
            Embedder::Hashing { d, salt } => Some(HashingEmbedder { d: *d, salt: *salt }),
            Embedder::Skipgram { .. } => None,
        }
    }
}

impl TokenEmbedder for Embedder {
    fn dim(&self) -> usize {
        match self {
            Embedder::Skipgram { table } => table.dim(),
            Embedder::Hashing { d, .. } => *d,
        }
    }

    fn write_vector(&self, token: &str, out: &mut [f64]) {
        match self {
            Embedder::Skipgram { table } => table.write_vector(token, out),
            Embedder::Hashing { .. } => self.hashing().unwrap().write_vector(token, out),
        }
    }

    fn empty_vector(&self) -> Vec<f64> {
        match self {
            Embedder::Skipgram { table } => table.empty_vector(),
            Embedder::Hashing { d, .. } => vec![0.0; *d],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineModel {
    pub model: Model,
    pub embedder: Embedder,
    pub rules: MergeRuleTable,
    pub config: PipelineConfig,
}

#[derive(Serialize, Deserialize)]
struct BundleRepr {
    format: String,
    model: Checkpoint,
    embedder: Embedder,
    rules: Vec<MergeRule>,
    config: PipelineConfig,
}

impl PipelineModel {
    pub fn new(model: Model, embedder: Embedder, rules: MergeRuleTable, config: PipelineConfig) -> Result<Self, PipelineError> {
        if embedder.dim() != model.config.eagcn.hidden {
            return Err(PipelineError::InvalidConfig(format!(
                "embedding width {} differs from model width {}",
                embedder.dim(),
                model.config.eagcn.hidden
            )));
        }
        Ok(PipelineModel { model, embedder, rules, config })
    }

    pub fn to_json(&self) -> String {
        let repr = BundleRepr {
            format: BUNDLE_FORMAT.into(),
            model: self.model.checkpoint(),
            embedder: self.embedder.clone(),
            rules: self.rules.rules().to_vec(),
            config: self.config.clone(),
        };
        serde_json::to_string(&repr).expect("bundle serializes")
    }

    pub fn from_json(text: &[u8]) -> Result<Self, PipelineError> {
        let repr: BundleRepr = serde_json::from_slice(text)
            .map_err(|e| PipelineError::Parse { path: "<bundle>".into(), message: e.to_string() })?;
        if repr.format != BUNDLE_FORMAT {
            return Err(PipelineError::InvalidConfig(format!("unsupported bundle format `{}`", repr.format)));
        }
        let model = repr.model.into_model()?;
        Self::new(model, repr.embedder, MergeRuleTable::new(repr.rules)?, repr.config)
    }

    pub fn save(&self, path: &Path) -> Result<(), PipelineError> {
        crate::write_file(path, self.to_json())
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = crate::read_file(path)?;
        Self::from_json(&text).map_err(|e| match e {
            PipelineError::Parse { message, .. } => PipelineError::Parse { path: path.to_path_buf(), message },
            other => other,
        })
    }
}
