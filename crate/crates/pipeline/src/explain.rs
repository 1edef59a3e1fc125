//! Statement-level attribution of a prediction.
//!
//! Node importance is the sum over channels of the rectified readout
//! activations at the node's position in the simplified graph. Every
//! original node inherits the importance of the node that represents it
//! after simplification, and statement weight is the summed importance of a
//! statement and the AST nodes below it (nested statements form their own
//! buckets).

use serde::{Deserialize, Serialize};

use ample_core::simplify::gs;
use ample_core::{CodeStructureGraph, NodeId, SimplificationTrace};

use crate::bundle::PipelineModel;
use crate::prepare::graph_input;
use crate::PipelineError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatementWeight {
    /// Node id in the original graph.
    pub statement: NodeId,
    pub orig_id: u64,
    pub node_type: String,
    pub code: String,
    pub line: Option<u32>,
    pub weight: f64,
    /// Original nodes attributed to this statement, ascending.
    pub nodes: Vec<NodeId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatementAttribution {
    /// Heaviest first; ties by node id.
    pub statements: Vec<StatementWeight>,
    /// Importance of every original node.
    pub node_importance: Vec<f64>,
    pub p_vulnerable: f64,
}

impl StatementAttribution {
    pub fn total(&self) -> f64 {
        self.node_importance.iter().sum()
    }

    /// 1-based rank of the statement with exporter id `orig_id`.
    pub fn rank_of(&self, orig_id: u64) -> Option<usize> {
        self.statements.iter().position(|s| s.orig_id == orig_id).map(|i| i + 1)
    }
}

/// For each node, the statement bucket it belongs to: the nearest
/// statement among itself and its AST ancestors, or the top of its AST
/// when there is none. A node with several AST parents follows the first.
pub fn statement_buckets(g: &CodeStructureGraph) -> Vec<NodeId> {
    (0..g.num_nodes())
        .map(|i| {
            let mut u = NodeId(i);
            loop {
                if g.nodes()[u.0].is_statement {
                    return u;
                }
                match g.ast_parents(u).expect("node in range").first() {
                    Some(&p) => u = p,
                    None => return u,
                }
            }
        })
        .collect()
}

fn check_trace(g: &CodeStructureGraph, trace: &SimplificationTrace) -> Result<(), PipelineError> {
    if trace.input_nodes != g.num_nodes() {
        return Err(PipelineError::UnknownTrace(format!(
            "trace covers {} nodes, graph has {}",
            trace.input_nodes,
            g.num_nodes()
        )));
    }
    if let Some(ev) = trace.events.iter().find(|e| e.kept.0 >= g.num_nodes() || e.removed.0 >= g.num_nodes()) {
        return Err(PipelineError::UnknownTrace(format!("merge {} -> {} is out of range", ev.removed, ev.kept)));
    }
    Ok(())
}

/// Explains the prediction for the original graph `g` given the trace of
/// its simplification under the bundle's merge rules.
pub fn explain_statements(
    bundle: &PipelineModel,
    g: &CodeStructureGraph,
    trace: &SimplificationTrace,
) -> Result<StatementAttribution, PipelineError> {
    check_trace(g, trace)?;
    let (simplified, expected) = gs(g, &bundle.rules);
    if &expected != trace {
        return Err(PipelineError::UnknownTrace("trace differs from the simplification of this graph".into()));
    }
    let input = graph_input(&simplified, &bundle.embedder, &bundle.model)?;
    let k = bundle.model.node_activations(&input)?;
    let p_vulnerable = bundle.model.predict(&input)?[1];
    let simplified_importance: Vec<f64> = k.outer_iter().map(|row| row.iter().map(|v| v.max(0.0)).sum()).collect();

    let node_importance: Vec<f64> = trace.node_map().iter().map(|m| simplified_importance[m.0]).collect();
    let buckets = statement_buckets(g);
    let mut members: Vec<Vec<NodeId>> = vec![Vec::new(); g.num_nodes()];
    for (i, b) in buckets.iter().enumerate() {
        members[b.0].push(NodeId(i));
    }
    let mut statements: Vec<StatementWeight> = members
        .into_iter()
        .enumerate()
        .filter(|(_, nodes)| !nodes.is_empty())
        .map(|(s, nodes)| {
            let node = &g.nodes()[s];
            StatementWeight {
                statement: NodeId(s),
                orig_id: node.orig_id,
                node_type: node.node_type.clone(),
                code: node.code.clone(),
                line: node.line,
                weight: nodes.iter().map(|n| node_importance[n.0]).sum(),
                nodes,
            }
        })
        .collect();
    statements.sort_by(|a, b| b.weight.total_cmp(&a.weight).then(a.statement.cmp(&b.statement)));
    Ok(StatementAttribution { statements, node_importance, p_vulnerable })
}
