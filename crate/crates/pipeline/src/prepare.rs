//! Per-graph preprocessing: simplification, token embedding and topology.

use rayon::prelude::*;

use ample_core::embed::{fit_token_embeddings, initial_node_matrix};
use ample_core::simplify::gs;
use ample_core::{CodeStructureGraph, Label, MergeRuleTable, SimplificationTrace};
use ample_model::model::GraphInput;
use ample_model::Model;

use crate::bundle::Embedder;
use crate::config::{EmbeddingKind, PipelineConfig};
use crate::PipelineError;

#[derive(Clone, Debug)]
pub struct Simplified {
    pub graph: CodeStructureGraph,
    pub trace: SimplificationTrace,
}

/// Simplifies every graph; output order matches input order.
pub fn simplify_all(graphs: &[CodeStructureGraph], rules: &MergeRuleTable) -> Vec<Simplified> {
    graphs
        .par_iter()
        .map(|g| {
            let (graph, trace) = gs(g, rules);
            Simplified { graph, trace }
        })
        .collect()
}

/// Embedder for a run: skip-gram vectors fitted on `graphs`, or hashed vectors.
pub fn fit_embedder<'a>(
    graphs: impl IntoIterator<Item = &'a CodeStructureGraph>,
    cfg: &PipelineConfig,
    seed: u64,
) -> Result<Embedder, PipelineError> {
    Ok(match cfg.embedding.kind {
        EmbeddingKind::Skipgram => Embedder::Skipgram {
            table: fit_token_embeddings(graphs, cfg.dim(), seed, &cfg.embedding.skipgram)?,
        },
        EmbeddingKind::Hashing => Embedder::Hashing { d: cfg.dim(), salt: seed },
    })
}

/// Model input for an already simplified graph.
pub fn graph_input(simplified: &CodeStructureGraph, embedder: &Embedder, model: &Model) -> Result<GraphInput, PipelineError> {
    Ok(model.input(simplified, initial_node_matrix(simplified, embedder))?)
}

pub fn graph_inputs(
    simplified: &[&CodeStructureGraph],
    embedder: &Embedder,
    model: &Model,
) -> Result<Vec<GraphInput>, PipelineError> {
    simplified.par_iter().map(|g| graph_input(g, embedder, model)).collect()
}

pub fn labels_of(graphs: &[&CodeStructureGraph]) -> Result<Vec<Label>, PipelineError> {
    graphs
        .iter()
        .map(|g| g.label().ok_or_else(|| PipelineError::Unlabeled(g.function_name().to_string())))
        .collect()
}
