#[path = "support/common.rs"]
mod common;

use ample_core::graph::build_graph;
use ample_core::simplify::gs;
use ample_core::{CodeStructureGraph, EdgeKind, Label, MergeRuleTable, NodeId, RawEdge, RawNode};
use ample_model::Model;
use ample_pipeline::explain::statement_buckets;
use ample_pipeline::{explain_statements, generate_synthetic_corpus, Embedder, PipelineError, PipelineModel};

use common::small_config;

fn bundle(seed: u64) -> PipelineModel {
    let cfg = small_config(seed);
    let model = Model::new(cfg.model.clone(), seed).unwrap();
    PipelineModel::new(model, Embedder::Hashing { d: 8, salt: seed }, MergeRuleTable::default(), cfg).unwrap()
}

fn one_statement() -> CodeStructureGraph {
    let nodes = vec![
        RawNode::new(10, "ExpressionStatement", "x = y + 1 ;").statement().at_line(3),
        RawNode::new(11, "AssignmentExpression", "x = y + 1"),
        RawNode::new(12, "Identifier", "x"),
        RawNode::new(13, "AdditiveExpression", "y + 1"),
        RawNode::new(14, "Identifier", "y"),
        RawNode::new(15, "PrimaryExpression", "1"),
    ];
    let edges = vec![
        RawEdge::new(10, 11, EdgeKind::Ast),
        RawEdge::new(11, 12, EdgeKind::Ast),
        RawEdge::new(11, 13, EdgeKind::Ast),
        RawEdge::new(13, 14, EdgeKind::Ast),
        RawEdge::new(13, 15, EdgeKind::Ast),
        RawEdge::new(12, 14, EdgeKind::Ncs),
        RawEdge::new(14, 15, EdgeKind::Ncs),
    ];
    build_graph(nodes, edges, "one", Some(Label::Vulnerable)).unwrap()
}

#[test]
fn single_statement_takes_all_weight() {
    let b = bundle(1);
    let g = one_statement();
    let (_, trace) = gs(&g, &b.rules);
    let a = explain_statements(&b, &g, &trace).unwrap();
    assert_eq!(a.statements.len(), 1);
    let s = &a.statements[0];
    assert_eq!(s.orig_id, 10);
    assert_eq!(s.line, Some(3));
    assert_eq!(s.nodes, (0..6).map(NodeId).collect::<Vec<_>>());
    assert!(a.total() > 0.0);
    assert!((s.weight - a.total()).abs() <= 1e-12 * a.total());
    assert_eq!(a.rank_of(10), Some(1));
}

#[test]
fn weights_partition_importance() {
    let b = bundle(2);
    let synth = generate_synthetic_corpus(10, 2).unwrap();
    for g in &synth.corpus.graphs {
        let (_, trace) = gs(g, &b.rules);
        let a = explain_statements(&b, g, &trace).unwrap();
        assert_eq!(a.node_importance.len(), g.num_nodes());
        assert!(a.node_importance.iter().all(|&v| v >= 0.0 && v.is_finite()));
        let mut seen = vec![0usize; g.num_nodes()];
        for s in &a.statements {
            assert!(s.weight >= 0.0);
            for n in &s.nodes {
                seen[n.0] += 1;
            }
        }
        assert!(seen.iter().all(|&c| c == 1));
        let sum: f64 = a.statements.iter().map(|s| s.weight).sum();
        assert!((sum - a.total()).abs() <= 1e-12 * a.total().max(1.0));
        assert!(a.statements.windows(2).all(|w| w[0].weight >= w[1].weight));
        assert!((0.0..=1.0).contains(&a.p_vulnerable));
    }
}

#[test]
fn merged_nodes_share_their_representative_importance() {
    let b = bundle(3);
    let g = &generate_synthetic_corpus(2, 3).unwrap().corpus.graphs[0];
    let (_, trace) = gs(g, &b.rules);
    let a = explain_statements(&b, g, &trace).unwrap();
    let map = trace.node_map();
    for ev in &trace.events {
        let (x, y) = (ev.kept.0, ev.removed.0);
        assert_eq!(map[x], map[y]);
        assert_eq!(a.node_importance[x], a.node_importance[y]);
    }
}

#[test]
fn buckets_follow_nearest_statement() {
    let g = one_statement();
    assert!(statement_buckets(&g).iter().all(|&b| b == NodeId(0)));
}

#[test]
fn foreign_trace_is_rejected() {
    let b = bundle(4);
    let synth = generate_synthetic_corpus(2, 4).unwrap();
    let (g0, g1) = (&synth.corpus.graphs[0], &synth.corpus.graphs[1]);
    let (_, t1) = gs(g1, &b.rules);
    let err = explain_statements(&b, g0, &t1).unwrap_err();
    assert!(matches!(err, PipelineError::UnknownTrace(_)));
    let (_, empty) = gs(g0, &MergeRuleTable::empty());
    let err = explain_statements(&b, g0, &empty).unwrap_err();
    assert!(matches!(err, PipelineError::UnknownTrace(_)));
}
