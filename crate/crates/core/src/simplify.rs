//! Type-based and variable-based graph simplification.
//!
//! Type-based simplification (TGS) walks every AST breadth-first and folds a
//! child into its parent whenever the (parent type, child type) pair appears
//! in a [`MergeRuleTable`]. The child's own children take its place, in
//! order, and are checked against the same parent again. Variable-based
//! simplification (VGS) then contracts identifier leaves that spell the same
//! variable into the first occurrence, which leaves that node with several
//! AST parents.
//!
//! Both passes only ever contract nodes, so node and edge counts never grow
//! and undirected distances between surviving nodes never grow either.
//! Non-AST edges that touched a removed node are moved onto the node that
//! absorbed it. Self-loops created by a contraction are dropped and exact
//! duplicate edges are collapsed.

use std::collections::{BTreeMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{CodeStructureGraph, Edge, Node, NodeId};

/// Matches any type when used as `ptype` or `ctype`.
pub const WILDCARD: &str = "*";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeRule {
    pub ptype: String,
    pub ctype: String,
    #[serde(default)]
    pub require_equal_code: bool,
}

impl MergeRule {
    pub fn new(ptype: &str, ctype: &str) -> Self {
        MergeRule { ptype: ptype.into(), ctype: ctype.into(), require_equal_code: false }
    }

    fn matches(&self, parent: &Node, child: &Node) -> bool {
        (self.ptype == WILDCARD || self.ptype == parent.node_type)
            && (self.ctype == WILDCARD || self.ctype == child.node_type)
            && (!self.require_equal_code || parent.code == child.code)
    }
}

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("rule {0} has an empty type")]
    EmptyType(usize),
    #[error("duplicate rule ({0}, {1})")]
    Duplicate(String, String),
    #[error("invalid rule table JSON: {0}")]
    Json(#[from] serde_json::Error),
}

/// Ordered list of merge rules; the first matching rule wins.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MergeRuleTable {
    rules: Vec<MergeRule>,
}

impl MergeRuleTable {
    pub fn new(rules: Vec<MergeRule>) -> Result<Self, RuleError> {
        let mut seen = HashSet::new();
        for (i, r) in rules.iter().enumerate() {
            if r.ptype.is_empty() || r.ctype.is_empty() {
                return Err(RuleError::EmptyType(i));
            }
            if !seen.insert((r.ptype.as_str(), r.ctype.as_str())) {
                return Err(RuleError::Duplicate(r.ptype.clone(), r.ctype.clone()));
            }
        }
        Ok(MergeRuleTable { rules })
    }

    pub fn empty() -> Self {
        MergeRuleTable { rules: Vec::new() }
    }

    /// Reads a JSON array of `{ptype, ctype, require_equal_code}`.
    pub fn from_json(text: &[u8]) -> Result<Self, RuleError> {
        let rules: Vec<MergeRule> = serde_json::from_slice(text)?;
        Self::new(rules)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.rules).expect("rules serialize")
    }

    pub fn rules(&self) -> &[MergeRule] {
        &self.rules
    }

    /// Index of the first rule accepting `(parent, child)`.
    pub fn match_rule(&self, parent: &Node, child: &Node) -> Option<usize> {
        self.rules.iter().position(|r| r.matches(parent, child))
    }
}

impl Default for MergeRuleTable {
    /// The seven C/C++ rules: expression statements, identifier
    /// declarations, conditions, for-loop initializers and three
    /// function-call shapes.
    fn default() -> Self {
        let mut argument = MergeRule::new("Argument", WILDCARD);
        argument.require_equal_code = true;
        MergeRuleTable {
            rules: vec![
                MergeRule::new("ExpressionStatement", "Expression"),
                MergeRule::new("IdentifierDeclStatement", "IdentifierDecl"),
                MergeRule::new("Condition", "Expression"),
                MergeRule::new("ForInit", "Expression"),
                MergeRule::new("CallExpression", "ArgumentList"),
                argument,
                MergeRule::new("Callee", "Identifier"),
            ],
        }
    }
}

/// Node types treated as variable leaves by VGS.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableTypes(pub Vec<String>);

impl Default for VariableTypes {
    fn default() -> Self {
        VariableTypes(vec!["Identifier".to_string()])
    }
}

impl VariableTypes {
    fn contains(&self, node_type: &str) -> bool {
        self.0.iter().any(|t| t == node_type)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Tgs,
    Vgs,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeEvent {
    pub kept: NodeId,
    pub removed: NodeId,
    pub phase: Phase,
    pub rule_index: Option<usize>,
}

/// Merge events of one simplification run, in ids of the run's input graph.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimplificationTrace {
    pub input_nodes: usize,
    pub events: Vec<MergeEvent>,
}

impl SimplificationTrace {
    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn removed_count(&self) -> usize {
        self.events.len()
    }

    /// For every input node, the input node that finally represents it.
    pub fn representatives(&self) -> Vec<NodeId> {
        let mut rep: Vec<NodeId> = (0..self.input_nodes).map(NodeId).collect();
        for ev in &self.events {
            rep[ev.removed.0] = ev.kept;
        }
        // resolve chains; every chain ends at a surviving node
        let mut out = rep.clone();
        for i in 0..self.input_nodes {
            let mut r = rep[i];
            let mut steps = 0;
            while rep[r.0] != r {
                r = rep[r.0];
                steps += 1;
                assert!(steps <= self.input_nodes, "cyclic merge trace");
            }
            out[i] = r;
        }
        out
    }

    /// For every input node, its id in the simplified graph.
    pub fn node_map(&self) -> Vec<NodeId> {
        let reps = self.representatives();
        let mut dense = vec![usize::MAX; self.input_nodes];
        let mut next = 0;
        for i in 0..self.input_nodes {
            if reps[i].0 == i {
                dense[i] = next;
                next += 1;
            }
        }
        reps.iter().map(|r| NodeId(dense[r.0])).collect()
    }
}

/// Type-based simplification.
pub fn tgs(g: &CodeStructureGraph, table: &MergeRuleTable) -> (CodeStructureGraph, SimplificationTrace) {
    let n = g.num_nodes();
    let nodes = g.nodes();
    let mut children: Vec<Vec<NodeId>> =
        (0..n).map(|i| g.ast_children(NodeId(i)).unwrap().to_vec()).collect();
    let parent_count: Vec<usize> = (0..n).map(|i| g.ast_parents(NodeId(i)).unwrap().len()).collect();

    let mut rep: Vec<usize> = (0..n).collect();
    let mut visited = vec![false; n];
    let mut trace = SimplificationTrace { input_nodes: n, events: Vec::new() };

    for root in g.ast_roots() {
        let mut queue = VecDeque::from([root.0]);
        while let Some(u) = queue.pop_front() {
            if visited[u] {
                continue;
            }
            visited[u] = true;
            let mut pending: VecDeque<NodeId> = children[u].iter().copied().collect();
            let mut kept = Vec::with_capacity(pending.len());
            while let Some(v) = pending.pop_front() {
                let rule = if parent_count[v.0] == 1 {
                    table.match_rule(&nodes[u], &nodes[v.0])
                } else {
                    None
                };
                match rule {
                    Some(idx) => {
                        rep[v.0] = u;
                        trace.events.push(MergeEvent {
                            kept: NodeId(u),
                            removed: v,
                            phase: Phase::Tgs,
                            rule_index: Some(idx),
                        });
                        // grandchildren take v's place and are checked against u
                        for &c in children[v.0].iter().rev() {
                            pending.push_front(c);
                        }
                    }
                    None => {
                        kept.push(v);
                        queue.push_back(v.0);
                    }
                }
            }
            children[u] = kept;
        }
    }

    if trace.is_empty() {
        return (g.clone(), trace);
    }

    // Rewrite the edge list in place: an AST edge into a removed node is
    // replaced by that node's (rewritten) child edges, so children keep
    // their source order under the absorbing parent.
    let removed: Vec<bool> = (0..n).map(|i| rep[i] != i).collect();
    let mut out_ast: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (k, e) in g.edges().iter().enumerate() {
        if e.kind.is_ast() {
            out_ast[e.src.0].push(k);
        }
    }
    let resolve = |mut x: usize| {
        while rep[x] != x {
            x = rep[x];
        }
        x
    };
    let mut edges = Vec::with_capacity(g.num_edges());
    for e in g.edges() {
        if e.kind.is_ast() {
            if removed[e.src.0] {
                continue; // emitted at the slot of the edge into e.src
            }
            expand_ast_edge(g, e, e.src, &removed, &out_ast, &mut edges);
        } else {
            edges.push(Edge {
                src: NodeId(resolve(e.src.0)),
                dst: NodeId(resolve(e.dst.0)),
                kind: e.kind.clone(),
                label: e.label.clone(),
            });
        }
    }
    let out = contract(g, &removed, g.edges(), edges);
    (out, trace)
}

fn expand_ast_edge(
    g: &CodeStructureGraph,
    e: &Edge,
    parent: NodeId,
    removed: &[bool],
    out_ast: &[Vec<usize>],
    edges: &mut Vec<Edge>,
) {
    if removed[e.dst.0] {
        for &k in &out_ast[e.dst.0] {
            expand_ast_edge(g, &g.edges()[k], parent, removed, out_ast, edges);
        }
    } else {
        edges.push(Edge { src: parent, dst: e.dst, kind: e.kind.clone(), label: e.label.clone() });
    }
}

/// Variable-based simplification with the default variable types.
pub fn vgs(g: &CodeStructureGraph) -> (CodeStructureGraph, SimplificationTrace) {
    vgs_with(g, &VariableTypes::default())
}

pub fn vgs_with(g: &CodeStructureGraph, vars: &VariableTypes) -> (CodeStructureGraph, SimplificationTrace) {
    let n = g.num_nodes();
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for leaf in g.ast_leaf_nodes() {
        let node = &g.nodes()[leaf.0];
        if vars.contains(&node.node_type) && !node.code.is_empty() {
            groups.entry(node.code.as_str()).or_default().push(leaf.0);
        }
    }
    let mut rep: Vec<usize> = (0..n).collect();
    let mut trace = SimplificationTrace { input_nodes: n, events: Vec::new() };
    for members in groups.values() {
        // leaf ids arrive sorted, so the first is the earliest occurrence
        let first = members[0];
        for &other in &members[1..] {
            rep[other] = first;
            trace.events.push(MergeEvent {
                kept: NodeId(first),
                removed: NodeId(other),
                phase: Phase::Vgs,
                rule_index: None,
            });
        }
    }
    trace.events.sort_by_key(|ev| ev.removed);
    if trace.is_empty() {
        return (g.clone(), trace);
    }
    let removed: Vec<bool> = (0..n).map(|i| rep[i] != i).collect();
    let edges = g
        .edges()
        .iter()
        .map(|e| Edge {
            src: NodeId(rep[e.src.0]),
            dst: NodeId(rep[e.dst.0]),
            kind: e.kind.clone(),
            label: e.label.clone(),
        })
        .collect();
    (contract(g, &removed, g.edges(), edges), trace)
}

/// Full simplification: TGS followed by VGS. The returned trace is expressed
/// in ids of `g`.
pub fn gs(g: &CodeStructureGraph, table: &MergeRuleTable) -> (CodeStructureGraph, SimplificationTrace) {
    gs_with(g, table, &VariableTypes::default())
}

pub fn gs_with(
    g: &CodeStructureGraph,
    table: &MergeRuleTable,
    vars: &VariableTypes,
) -> (CodeStructureGraph, SimplificationTrace) {
    let (typed, mut trace) = tgs(g, table);
    let (out, var_trace) = vgs_with(&typed, vars);
    // map VGS ids (TGS output) back to ids of g
    let survivors: Vec<NodeId> = {
        let reps = trace.representatives();
        (0..g.num_nodes()).filter(|&i| reps[i].0 == i).map(NodeId).collect()
    };
    trace.events.extend(var_trace.events.into_iter().map(|ev| MergeEvent {
        kept: survivors[ev.kept.0],
        removed: survivors[ev.removed.0],
        ..ev
    }));
    (out, trace)
}

/// Drops removed nodes, re-indexes survivors in order, drops self-loops the
/// contraction created and collapses exact duplicate edges.
fn contract(
    g: &CodeStructureGraph,
    removed: &[bool],
    original: &[Edge],
    rewritten: Vec<Edge>,
) -> CodeStructureGraph {
    let original_loops: HashSet<&Edge> = original.iter().filter(|e| e.src == e.dst).collect();
    let mut dense = vec![usize::MAX; removed.len()];
    let mut nodes = Vec::with_capacity(removed.len());
    for (i, node) in g.nodes().iter().enumerate() {
        if !removed[i] {
            dense[i] = nodes.len();
            let mut kept = node.clone();
            kept.id = NodeId(nodes.len());
            nodes.push(kept);
        }
    }
    let mut seen = HashSet::with_capacity(rewritten.len());
    let mut edges = Vec::with_capacity(rewritten.len());
    for e in rewritten {
        if e.src == e.dst && !original_loops.contains(&e) {
            continue;
        }
        if !seen.insert(e.clone()) {
            continue;
        }
        edges.push(Edge {
            src: NodeId(dense[e.src.0]),
            dst: NodeId(dense[e.dst.0]),
            kind: e.kind,
            label: e.label,
        });
    }
    let (_, _, name, label) = g.clone().into_parts();
    CodeStructureGraph::from_parts(nodes, edges, name, label)
        .expect("contraction of a valid graph stays valid")
}
