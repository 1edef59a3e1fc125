//! Shared helpers: a small, fast configuration and sample preparation.

#![allow(dead_code)]

use ample_core::{CodeStructureGraph, Label, MergeRuleTable};
use ample_model::model::GraphInput;
use ample_model::{Model, ModelConfig};
use ample_pipeline::prepare::{graph_inputs, labels_of, simplify_all};
use ample_pipeline::{Embedder, EmbeddingKind, PipelineConfig};

pub fn small_config(seed: u64) -> PipelineConfig {
    let mut cfg = PipelineConfig::default();
    cfg.model = ModelConfig::with_dim(8);
    cfg.model.eagcn.heads = 2;
    cfg.embedding.kind = EmbeddingKind::Hashing;
    cfg.train.seed = seed;
    cfg.train.batch_size = 4;
    cfg.train.max_epochs = 6;
    cfg.train.patience = 3;
    cfg
}

pub fn samples(graphs: &[CodeStructureGraph], model: &Model, salt: u64) -> Vec<(GraphInput, Label)> {
    let simplified = simplify_all(graphs, &MergeRuleTable::default());
    let refs: Vec<&CodeStructureGraph> = simplified.iter().map(|s| &s.graph).collect();
    let embedder = Embedder::Hashing { d: model.config.eagcn.hidden, salt };
    graph_inputs(&refs, &embedder, model).unwrap().into_iter().zip(labels_of(&refs).unwrap()).collect()
}

pub fn refs(v: &[(GraphInput, Label)]) -> Vec<(&GraphInput, Label)> {
    v.iter().map(|(i, l)| (i, *l)).collect()
}
