//! Seeded random code structure graphs for property tests.
//!
//! Node types are drawn from the C/C++ types the default merge rules talk
//! about, and codes from a small pool, so rule matches and repeated
//! variables are common.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{build_graph, CodeStructureGraph, EdgeKind, RawEdge, RawNode};

const TYPES: [&str; 14] = [
    "ExpressionStatement",
    "Expression",
    "IdentifierDeclStatement",
    "IdentifierDecl",
    "Condition",
    "ForInit",
    "CallExpression",
    "ArgumentList",
    "Argument",
    "Callee",
    "Identifier",
    "Identifier",
    "PrimaryExpression",
    "CompoundStatement",
];

const CODES: [&str; 6] = ["x", "y", "buf", "n", "x + 1", "f ( x )"];

/// A random valid graph with `1..=max_nodes` nodes.
pub fn random_graph(seed: u64, max_nodes: usize) -> CodeStructureGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=max_nodes.max(1));
    let mut nodes = Vec::with_capacity(n);
    let mut edges = Vec::new();
    for i in 0..n {
        let node_type = if i == 0 { "FunctionDef" } else { *TYPES.choose(&mut rng).unwrap() };
        let code = *CODES.choose(&mut rng).unwrap();
        let mut node = RawNode::new(i as u64, node_type, code).at_line(1 + i as u32 / 3);
        node.is_statement = node_type.ends_with("Statement");
        nodes.push(node);
        if i > 0 && rng.gen_bool(0.92) {
            let parent = rng.gen_range(0..i) as u64;
            edges.push(RawEdge::new(parent, i as u64, EdgeKind::Ast));
        }
    }
    let extra = rng.gen_range(0..=n);
    for _ in 0..extra {
        let a = rng.gen_range(0..n) as u64;
        let b = rng.gen_range(0..n) as u64;
        let edge = match rng.gen_range(0..3) {
            0 => RawEdge::new(a, b, EdgeKind::Cfg),
            1 => RawEdge::new(a, b, EdgeKind::Dfg).labeled(*CODES[..4].choose(&mut rng).unwrap()),
            _ => RawEdge::new(a, b, EdgeKind::Ncs),
        };
        edges.push(edge);
    }
    build_graph(nodes, edges, format!("rand{seed}"), None).expect("generator emits valid graphs")
}
