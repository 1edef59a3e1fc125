//! In-memory code structure graph.
//!
//! Nodes are re-indexed densely at construction so that node `i` is row `i`
//! of every feature matrix downstream. The exporter's own id is kept in
//! [`Node::orig_id`] for round-tripping.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Dense node index, `0..|V|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Relation type of an edge.
///
/// The four Joern relations are built in. Anything else is carried as
/// `Other(tag)` and written as `X-<tag>` on the wire.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeKind {
    Ast,
    Cfg,
    Dfg,
    Ncs,
    Other(String),
}

impl EdgeKind {
    pub fn is_ast(&self) -> bool {
        matches!(self, EdgeKind::Ast)
    }

    /// Wire name: `AST`, `CFG`, `DFG`, `NCS` or `X-<tag>`.
    pub fn name(&self) -> String {
        match self {
            EdgeKind::Ast => "AST".into(),
            EdgeKind::Cfg => "CFG".into(),
            EdgeKind::Dfg => "DFG".into(),
            EdgeKind::Ncs => "NCS".into(),
            EdgeKind::Other(tag) => format!("X-{tag}"),
        }
    }
}

impl fmt::Display for EdgeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown edge kind `{0}` (expected AST, CFG, DFG, NCS or X-<tag>)")]
pub struct UnknownEdgeKind(pub String);

impl FromStr for EdgeKind {
    type Err = UnknownEdgeKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "AST" => Ok(EdgeKind::Ast),
            "CFG" => Ok(EdgeKind::Cfg),
            "DFG" => Ok(EdgeKind::Dfg),
            "NCS" => Ok(EdgeKind::Ncs),
            other => match other.strip_prefix("X-") {
                Some(tag) if !tag.is_empty() => Ok(EdgeKind::Other(tag.to_string())),
                _ => Err(UnknownEdgeKind(s.to_string())),
            },
        }
    }
}

impl serde::Serialize for EdgeKind {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

impl<'de> serde::Deserialize<'de> for EdgeKind {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Ground-truth label of a function.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    NonVulnerable,
    Vulnerable,
}

impl Label {
    pub fn as_u8(self) -> u8 {
        match self {
            Label::NonVulnerable => 0,
            Label::Vulnerable => 1,
        }
    }

    pub fn from_u8(v: u8) -> Option<Label> {
        match v {
            0 => Some(Label::NonVulnerable),
            1 => Some(Label::Vulnerable),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Node {
    pub id: NodeId,
    /// Id assigned by the exporter; unique within the graph.
    pub orig_id: u64,
    pub node_type: String,
    pub code: String,
    pub line: Option<u32>,
    /// True for statement-level AST roots.
    pub is_statement: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    pub kind: EdgeKind,
    pub label: Option<String>,
}

impl Edge {
    pub fn new(src: NodeId, dst: NodeId, kind: EdgeKind) -> Self {
        Edge { src, dst, kind, label: None }
    }
}

/// Node as delivered by an exporter, before re-indexing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawNode {
    pub id: u64,
    pub node_type: String,
    pub code: String,
    pub line: Option<u32>,
    pub is_statement: bool,
}

impl RawNode {
    pub fn new(id: u64, node_type: impl Into<String>, code: impl Into<String>) -> Self {
        RawNode {
            id,
            node_type: node_type.into(),
            code: code.into(),
            line: None,
            is_statement: false,
        }
    }

    pub fn statement(mut self) -> Self {
        self.is_statement = true;
        self
    }

    pub fn at_line(mut self, line: u32) -> Self {
        self.line = Some(line);
        self
    }
}

/// Edge as delivered by an exporter, referencing exporter ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RawEdge {
    pub src: u64,
    pub dst: u64,
    pub kind: EdgeKind,
    pub label: Option<String>,
}

impl RawEdge {
    pub fn new(src: u64, dst: u64, kind: EdgeKind) -> Self {
        RawEdge { src, dst, kind, label: None }
    }

    pub fn labeled(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("edge {src} -> {dst} references an unknown node")]
    DanglingEdge { src: u64, dst: u64 },
    #[error("AST edges contain a cycle")]
    AstCycle,
    #[error("AST self-loop on node {0}")]
    AstSelfLoop(u64),
    #[error("non-leaf node {0} has more than one AST parent")]
    AstMultiParent(u64),
    #[error("duplicate node id {0}")]
    DuplicateId(u64),
    #[error("node {0} has an empty node type")]
    EmptyNodeType(u64),
    #[error("unknown node {0}")]
    UnknownNode(usize),
}

/// A validated, immutable code structure graph for one function.
#[derive(Clone, Debug)]
pub struct CodeStructureGraph {
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    function_name: String,
    label: Option<Label>,
    children: Vec<Vec<NodeId>>,
    parents: Vec<Vec<NodeId>>,
}

impl PartialEq for CodeStructureGraph {
    fn eq(&self, other: &Self) -> bool {
        // adjacency caches are derived from the edge list
        self.nodes == other.nodes
            && self.edges == other.edges
            && self.function_name == other.function_name
            && self.label == other.label
    }
}

impl Eq for CodeStructureGraph {}

/// Validates exporter output and re-indexes node ids densely in list order.
pub fn build_graph(
    nodes: Vec<RawNode>,
    edges: Vec<RawEdge>,
    function_name: impl Into<String>,
    label: Option<Label>,
) -> Result<CodeStructureGraph, GraphError> {
    let mut index = HashMap::with_capacity(nodes.len());
    let mut dense = Vec::with_capacity(nodes.len());
    for (i, raw) in nodes.into_iter().enumerate() {
        if index.insert(raw.id, NodeId(i)).is_some() {
            return Err(GraphError::DuplicateId(raw.id));
        }
        dense.push(Node {
            id: NodeId(i),
            orig_id: raw.id,
            node_type: raw.node_type,
            code: raw.code,
            line: raw.line,
            is_statement: raw.is_statement,
        });
    }
    let mut dense_edges = Vec::with_capacity(edges.len());
    for e in edges {
        let (Some(&src), Some(&dst)) = (index.get(&e.src), index.get(&e.dst)) else {
            return Err(GraphError::DanglingEdge { src: e.src, dst: e.dst });
        };
        dense_edges.push(Edge { src, dst, kind: e.kind, label: e.label });
    }
    CodeStructureGraph::from_parts(dense, dense_edges, function_name, label)
}

impl CodeStructureGraph {
    /// Assembles a graph from already dense nodes (`nodes[i].id == i`).
    ///
    /// AST leaves may have several AST parents (the shape variable merging
    /// produces); any interior node with more than one parent is rejected.
    pub fn from_parts(
        nodes: Vec<Node>,
        edges: Vec<Edge>,
        function_name: impl Into<String>,
        label: Option<Label>,
    ) -> Result<CodeStructureGraph, GraphError> {
        let n = nodes.len();
        for (i, node) in nodes.iter().enumerate() {
            if node.id.0 != i {
                return Err(GraphError::UnknownNode(node.id.0));
            }
            if node.node_type.is_empty() {
                return Err(GraphError::EmptyNodeType(node.orig_id));
            }
        }
        let mut children = vec![Vec::new(); n];
        let mut parents = vec![Vec::new(); n];
        for e in &edges {
            if e.src.0 >= n || e.dst.0 >= n {
                return Err(GraphError::DanglingEdge {
                    src: e.src.0 as u64,
                    dst: e.dst.0 as u64,
                });
            }
            if e.kind.is_ast() {
                if e.src == e.dst {
                    return Err(GraphError::AstSelfLoop(nodes[e.src.0].orig_id));
                }
                children[e.src.0].push(e.dst);
                parents[e.dst.0].push(e.src);
            }
        }
        for i in 0..n {
            if parents[i].len() > 1 && !children[i].is_empty() {
                return Err(GraphError::AstMultiParent(nodes[i].orig_id));
            }
        }
        if has_cycle(&children) {
            return Err(GraphError::AstCycle);
        }
        Ok(CodeStructureGraph {
            nodes,
            edges,
            function_name: function_name.into(),
            label,
            children,
            parents,
        })
    }

    pub fn empty(function_name: impl Into<String>) -> Self {
        CodeStructureGraph {
            nodes: Vec::new(),
            edges: Vec::new(),
            function_name: function_name.into(),
            label: None,
            children: Vec::new(),
            parents: Vec::new(),
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node(&self, id: NodeId) -> Result<&Node, GraphError> {
        self.nodes.get(id.0).ok_or(GraphError::UnknownNode(id.0))
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn function_name(&self) -> &str {
        &self.function_name
    }

    pub fn label(&self) -> Option<Label> {
        self.label
    }

    pub fn with_label(mut self, label: Option<Label>) -> Self {
        self.label = label;
        self
    }

    /// AST children of `u` in edge insertion order.
    pub fn ast_children(&self, u: NodeId) -> Result<&[NodeId], GraphError> {
        self.children
            .get(u.0)
            .map(Vec::as_slice)
            .ok_or(GraphError::UnknownNode(u.0))
    }

    pub fn ast_parents(&self, u: NodeId) -> Result<&[NodeId], GraphError> {
        self.parents
            .get(u.0)
            .map(Vec::as_slice)
            .ok_or(GraphError::UnknownNode(u.0))
    }

    /// Nodes without outgoing AST edges, in id order.
    pub fn ast_leaf_nodes(&self) -> Vec<NodeId> {
        (0..self.nodes.len())
            .filter(|&i| self.children[i].is_empty())
            .map(NodeId)
            .collect()
    }

    /// Nodes without incoming AST edges, in id order. Isolated nodes count.
    pub fn ast_roots(&self) -> Vec<NodeId> {
        (0..self.nodes.len())
            .filter(|&i| self.parents[i].is_empty())
            .map(NodeId)
            .collect()
    }

    /// Neighbor lists of the undirected view over all edge kinds.
    /// Duplicates are removed; self-loops are dropped.
    pub fn undirected_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for e in &self.edges {
            if e.src != e.dst {
                adj[e.src.0].push(e.dst.0);
                adj[e.dst.0].push(e.src.0);
            }
        }
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
        }
        adj
    }

    /// Distinct edge kinds present, sorted.
    pub fn edge_kinds(&self) -> Vec<EdgeKind> {
        let mut kinds: Vec<EdgeKind> = self.edges.iter().map(|e| e.kind.clone()).collect();
        kinds.sort();
        kinds.dedup();
        kinds
    }

    /// Relabels nodes so that old node `i` becomes node `perm[i]`.
    ///
    /// Edge order is preserved, so AST child order of every node is kept.
    pub fn permuted(&self, perm: &[usize]) -> CodeStructureGraph {
        assert_eq!(perm.len(), self.nodes.len(), "permutation length mismatch");
        let mut nodes = self.nodes.clone();
        for (old, node) in self.nodes.iter().enumerate() {
            let mut moved = node.clone();
            moved.id = NodeId(perm[old]);
            nodes[perm[old]] = moved;
        }
        let edges = self
            .edges
            .iter()
            .map(|e| Edge {
                src: NodeId(perm[e.src.0]),
                dst: NodeId(perm[e.dst.0]),
                kind: e.kind.clone(),
                label: e.label.clone(),
            })
            .collect();
        CodeStructureGraph::from_parts(nodes, edges, self.function_name.clone(), self.label)
            .expect("relabeling preserves validity")
    }

    pub fn into_parts(self) -> (Vec<Node>, Vec<Edge>, String, Option<Label>) {
        (self.nodes, self.edges, self.function_name, self.label)
    }
}

fn has_cycle(children: &[Vec<NodeId>]) -> bool {
    let n = children.len();
    let mut indegree = vec![0usize; n];
    for list in children {
        for c in list {
            indegree[c.0] += 1;
        }
    }
    let mut stack: Vec<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut seen = 0;
    while let Some(u) = stack.pop() {
        seen += 1;
        for c in &children[u] {
            indegree[c.0] -= 1;
            if indegree[c.0] == 0 {
                stack.push(c.0);
            }
        }
    }
    seen != n
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig3_subtree() -> CodeStructureGraph {
        let nodes = vec![
            RawNode::new(10, "IdentifierDeclStatement", "char * first = malloc(10);").statement(),
            RawNode::new(11, "IdentifierDecl", "* first = malloc(10)"),
            RawNode::new(12, "IdentifierDeclType", "char *"),
            RawNode::new(13, "Identifier", "first"),
            RawNode::new(14, "AssignmentExpr", "first = malloc(10)"),
        ];
        let edges = vec![
            RawEdge::new(10, 11, EdgeKind::Ast),
            RawEdge::new(11, 12, EdgeKind::Ast),
            RawEdge::new(11, 13, EdgeKind::Ast),
            RawEdge::new(11, 14, EdgeKind::Ast),
        ];
        build_graph(nodes, edges, "f", None).unwrap()
    }

    #[test]
    fn empty_graph() {
        let g = build_graph(vec![], vec![], "f", None).unwrap();
        assert_eq!(g.num_nodes(), 0);
        assert_eq!(g.num_edges(), 0);
        assert!(g.ast_leaf_nodes().is_empty());
    }

    #[test]
    fn fig3_statement_has_single_child() {
        let g = fig3_subtree();
        assert_eq!(g.num_nodes(), 5);
        assert_eq!(g.ast_children(NodeId(0)).unwrap(), &[NodeId(1)]);
        assert_eq!(
            g.ast_children(NodeId(1)).unwrap(),
            &[NodeId(2), NodeId(3), NodeId(4)]
        );
        assert!(g.ast_children(NodeId(3)).unwrap().is_empty());
        assert_eq!(g.node(NodeId(1)).unwrap().orig_id, 11);
    }

    #[test]
    fn rejects_ast_cycle() {
        let nodes = vec![RawNode::new(0, "A", ""), RawNode::new(1, "B", "")];
        let edges = vec![RawEdge::new(0, 1, EdgeKind::Ast), RawEdge::new(1, 0, EdgeKind::Ast)];
        // node 1 is non-leaf with parent 0; node 0 has parent 1: caught as a cycle
        assert_eq!(build_graph(nodes, edges, "f", None), Err(GraphError::AstCycle));
    }

    #[test]
    fn cfg_cycles_are_fine() {
        let nodes = vec![RawNode::new(0, "A", ""), RawNode::new(1, "B", "")];
        let edges = vec![RawEdge::new(0, 1, EdgeKind::Cfg), RawEdge::new(1, 0, EdgeKind::Cfg)];
        assert!(build_graph(nodes, edges, "f", None).is_ok());
    }

    #[test]
    fn rejects_dangling_and_duplicates() {
        let nodes = vec![RawNode::new(0, "A", "")];
        let edges = vec![RawEdge::new(0, 7, EdgeKind::Cfg)];
        assert_eq!(
            build_graph(nodes.clone(), edges, "f", None),
            Err(GraphError::DanglingEdge { src: 0, dst: 7 })
        );
        let dup = vec![RawNode::new(0, "A", ""), RawNode::new(0, "B", "")];
        assert_eq!(build_graph(dup, vec![], "f", None), Err(GraphError::DuplicateId(0)));
    }

    #[test]
    fn rejects_interior_multi_parent() {
        let nodes = vec![
            RawNode::new(0, "A", ""),
            RawNode::new(1, "B", ""),
            RawNode::new(2, "C", ""),
            RawNode::new(3, "D", ""),
        ];
        let edges = vec![
            RawEdge::new(0, 2, EdgeKind::Ast),
            RawEdge::new(1, 2, EdgeKind::Ast),
            RawEdge::new(2, 3, EdgeKind::Ast),
        ];
        assert_eq!(build_graph(nodes, edges, "f", None), Err(GraphError::AstMultiParent(2)));
    }

    #[test]
    fn leaf_and_unknown_queries() {
        let g = build_graph(vec![RawNode::new(5, "Identifier", "x")], vec![], "f", None).unwrap();
        assert_eq!(g.ast_leaf_nodes(), vec![NodeId(0)]);
        assert_eq!(g.ast_children(NodeId(3)), Err(GraphError::UnknownNode(3)));
    }

    #[test]
    fn edge_kind_names_round_trip() {
        for s in ["AST", "CFG", "DFG", "NCS", "X-CDG"] {
            assert_eq!(s.parse::<EdgeKind>().unwrap().name(), s);
        }
        assert!("X-".parse::<EdgeKind>().is_err());
        assert!("ast".parse::<EdgeKind>().is_err());
    }

    #[test]
    fn permutation_moves_rows() {
        let g = fig3_subtree();
        let p = g.permuted(&[4, 3, 2, 1, 0]);
        assert_eq!(p.node(NodeId(4)).unwrap().orig_id, 10);
        assert_eq!(p.ast_children(NodeId(3)).unwrap(), &[NodeId(2), NodeId(1), NodeId(0)]);
    }
}
