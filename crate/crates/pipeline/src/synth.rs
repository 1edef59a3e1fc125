//! Synthetic Joern-style function graphs with a planted vulnerability.
//!
//! Every function takes a `char *` parameter, declares a stack buffer and
//! performs one copy into it among filler statements. In vulnerable
//! functions the copy is `strcpy(buf, <param>)`, fed by a data-flow edge
//! from the parameter. Benign functions copy with `strncpy`, `snprintf`, or
//! `strcpy` of a string literal.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ample_core::graph::build_graph;
use ample_core::{CodeStructureGraph, Corpus, EdgeKind, Label, RawEdge, RawNode};

use crate::PipelineError;

pub const MIN_NODES: usize = 10;
pub const MAX_NODES: usize = 80;
/// Largest filler statement, in nodes.
const MAX_FILLER: usize = 11;

#[derive(Clone, Debug)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    /// Exporter id of the planted copy statement, per graph (`None` for benign).
    pub motif_statements: Vec<Option<u64>>,
}

pub fn generate_synthetic_corpus(n: usize, seed: u64) -> Result<SyntheticCorpus, PipelineError> {
    if n < 2 {
        return Err(PipelineError::InvalidConfig(format!("synthetic corpus needs at least 2 graphs, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels: Vec<bool> = (0..n).map(|i| i < n / 2).collect();
    labels.shuffle(&mut rng);
    let mut graphs = Vec::with_capacity(n);
    let mut motifs = Vec::with_capacity(n);
    for (i, &vulnerable) in labels.iter().enumerate() {
        let graph_seed = rng.gen::<u64>();
        let (g, motif) = synth_function(&format!("func_{i:04}"), vulnerable, graph_seed);
        graphs.push(g);
        motifs.push(motif);
    }
    let mut corpus = Corpus::from_graphs(graphs, format!("synthetic(n={n}, seed={seed})"));
    corpus.names = (0..n).map(|i| format!("func_{i:04}")).collect();
    Ok(SyntheticCorpus { corpus, motif_statements: motifs })
}

const POINTER_PARAMS: [&str; 5] = ["src", "input", "data", "name", "path"];
const INT_PARAMS: [&str; 4] = ["len", "size", "flags", "count"];
const LOCALS: [&str; 6] = ["i", "n", "total", "rc", "idx", "tmp"];
const CALLS: [&str; 5] = ["printf", "log_msg", "process", "update", "check"];

struct Builder {
    rng: ChaCha8Rng,
    nodes: Vec<RawNode>,
    edges: Vec<RawEdge>,
    leaves: Vec<u64>,
    line: u32,
    /// Variable -> node that last defined it.
    defs: HashMap<String, u64>,
    /// Statements in control-flow order.
    flow: Vec<u64>,
    ints: Vec<String>,
}

impl Builder {
    fn add(&mut self, parent: Option<u64>, ty: &str, code: &str) -> u64 {
        let id = self.nodes.len() as u64;
        self.nodes.push(RawNode::new(id, ty, code).at_line(self.line));
        if let Some(p) = parent {
            self.edges.push(RawEdge::new(p, id, EdgeKind::Ast));
        }
        id
    }

    fn leaf(&mut self, parent: u64, ty: &str, code: &str) -> u64 {
        let id = self.add(Some(parent), ty, code);
        self.leaves.push(id);
        id
    }

    fn statement(&mut self, parent: u64, ty: &str, code: &str) -> u64 {
        self.line += 1;
        let id = self.add(Some(parent), ty, code);
        self.nodes[id as usize].is_statement = true;
        self.flow.push(id);
        id
    }

    fn uses(&mut self, stmt: u64, var: &str) {
        if let Some(&def) = self.defs.get(var) {
            let dup = self.edges.iter().any(|e| {
                e.src == def && e.dst == stmt && e.kind == EdgeKind::Dfg && e.label.as_deref() == Some(var)
            });
            if def != stmt && !dup {
                self.edges.push(RawEdge::new(def, stmt, EdgeKind::Dfg).labeled(var));
            }
        }
    }

    fn defines(&mut self, stmt: u64, var: &str) {
        self.defs.insert(var.to_string(), stmt);
    }

    fn pick_int(&mut self) -> String {
        self.ints.choose(&mut self.rng).cloned().unwrap_or_else(|| "0".into())
    }

    fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn int_decl(&mut self, body: u64) {
        let fresh: Vec<&str> = LOCALS.iter().copied().filter(|v| !self.ints.iter().any(|x| x == v)).collect();
        let Some(&v) = fresh.choose(&mut self.rng) else {
            return self.assign(body);
        };
        let k = self.rng.gen_range(0..100);
        let s = self.statement(body, "IdentifierDeclStatement", &format!("int {v} = {k} ;"));
        let decl = self.add(Some(s), "IdentifierDecl", &format!("{v} = {k}"));
        self.leaf(decl, "IdentifierDeclType", "int");
        self.leaf(decl, "Identifier", v);
        let a = self.add(Some(decl), "AssignmentExpression", &format!("{v} = {k}"));
        self.leaf(a, "Identifier", v);
        self.leaf(a, "PrimaryExpression", &k.to_string());
        self.defines(s, v);
        self.ints.push(v.to_string());
    }

    fn assign(&mut self, body: u64) {
        let v = self.pick_int();
        let w = self.pick_int();
        let k = self.rng.gen_range(1..10);
        let op = *["+", "-", "*"].choose(&mut self.rng).unwrap();
        let s = self.statement(body, "ExpressionStatement", &format!("{v} = {w} {op} {k} ;"));
        let a = self.add(Some(s), "AssignmentExpression", &format!("{v} = {w} {op} {k}"));
        self.leaf(a, "Identifier", &v);
        let ty = if op == "*" { "MultiplicativeExpression" } else { "AdditiveExpression" };
        let e = self.add(Some(a), ty, &format!("{w} {op} {k}"));
        self.leaf(e, "Identifier", &w);
        self.leaf(e, "PrimaryExpression", &k.to_string());
        self.uses(s, &w);
        self.defines(s, &v);
    }

    fn call(&mut self, body: u64) {
        let f = *CALLS.choose(&mut self.rng).unwrap();
        let v = self.pick_int();
        let s = self.statement(body, "ExpressionStatement", &format!("{f} ( \"%d\" , {v} ) ;"));
        let c = self.add(Some(s), "CallExpression", &format!("{f} ( \"%d\" , {v} )"));
        let callee = self.add(Some(c), "Callee", f);
        self.leaf(callee, "Identifier", f);
        let args = self.add(Some(c), "ArgumentList", &format!("\"%d\" , {v}"));
        let a0 = self.add(Some(args), "Argument", "\"%d\"");
        self.leaf(a0, "PrimaryExpression", "\"%d\"");
        let a1 = self.add(Some(args), "Argument", &v);
        self.leaf(a1, "Identifier", &v);
        self.uses(s, &v);
    }

    fn branch(&mut self, body: u64) {
        let v = self.pick_int();
        let k = self.rng.gen_range(0..64);
        let s = self.statement(body, "IfStatement", &format!("if ( {v} > {k} )"));
        let cond = self.add(Some(s), "Condition", &format!("{v} > {k}"));
        let rel = self.add(Some(cond), "RelationalExpression", &format!("{v} > {k}"));
        self.leaf(rel, "Identifier", &v);
        self.leaf(rel, "PrimaryExpression", &k.to_string());
        self.uses(s, &v);
        self.assign(s);
    }

    fn filler(&mut self, body: u64) {
        match self.rng.gen_range(0..10) {
            0..=1 => self.int_decl(body),
            2..=4 => self.assign(body),
            5..=7 => self.call(body),
            _ => self.branch(body),
        }
    }

    fn copy_args(&mut self, stmt: u64, call: u64, args: &[(&str, &str)]) {
        let text: Vec<&str> = args.iter().map(|(_, c)| *c).collect();
        let list = self.add(Some(call), "ArgumentList", &text.join(" , "));
        for &(ty, code) in args {
            let a = self.add(Some(list), "Argument", code);
            self.leaf(a, ty, code);
            if ty == "Identifier" {
                self.uses(stmt, code);
            }
        }
    }
}

/// Builds one function; returns the graph and the exporter id of the planted
/// copy statement when `vulnerable`.
fn synth_function(name: &str, vulnerable: bool, seed: u64) -> (CodeStructureGraph, Option<u64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let target = rng.gen_range(MIN_NODES..=MAX_NODES);
    let ptr = *POINTER_PARAMS.choose(&mut rng).unwrap();
    let int_param = rng.gen_bool(0.6).then(|| *INT_PARAMS.choose(&mut rng).unwrap());
    let mut b = Builder {
        rng,
        nodes: Vec::new(),
        edges: Vec::new(),
        leaves: Vec::new(),
        line: 1,
        defs: HashMap::new(),
        flow: Vec::new(),
        ints: Vec::new(),
    };

    let signature = match int_param {
        Some(p) => format!("void {name} ( char * {ptr} , int {p} )"),
        None => format!("void {name} ( char * {ptr} )"),
    };
    let root = b.add(None, "FunctionDef", &signature);
    let plist = b.add(Some(root), "ParameterList", "");
    let mut params = vec![(ptr, "char *")];
    if let Some(p) = int_param {
        params.push((p, "int"));
        b.ints.push(p.to_string());
    }
    for (p, ty) in params {
        let node = b.add(Some(plist), "Parameter", &format!("{ty} {p}"));
        b.leaf(node, "ParameterType", ty);
        b.leaf(node, "Identifier", p);
        b.defines(node, p);
    }
    let body = b.add(Some(root), "CompoundStatement", "");

    let size = *[16, 32, 64].choose(&mut b.rng).unwrap();
    let s = b.statement(body, "IdentifierDeclStatement", &format!("char buf [ {size} ] ;"));
    let decl = b.add(Some(s), "IdentifierDecl", &format!("buf [ {size} ]"));
    b.leaf(decl, "IdentifierDeclType", &format!("char [ {size} ]"));
    b.leaf(decl, "Identifier", "buf");
    b.leaf(decl, "PrimaryExpression", &size.to_string());
    b.defines(s, "buf");
    if b.ints.is_empty() {
        b.int_decl(body);
    }

    // fillers before and after the copy, within the node budget
    const COPY_MAX: usize = 12;
    const RETURN: usize = 2;
    let room = target.saturating_sub(b.node_count() + COPY_MAX + RETURN);
    let before_budget = b.node_count() + (room as f64 * b.rng.gen::<f64>()) as usize;
    while b.node_count() + MAX_FILLER <= before_budget {
        b.filler(body);
    }

    let variant = if vulnerable { 0 } else { b.rng.gen_range(1..=3) };
    let (callee, text, args): (&str, String, Vec<(&str, String)>) = match variant {
        0 => ("strcpy", format!("strcpy ( buf , {ptr} )"), vec![("Identifier", "buf".into()), ("Identifier", ptr.into())]),
        1 => (
            "strncpy",
            format!("strncpy ( buf , {ptr} , {size} - 1 )"),
            vec![("Identifier", "buf".into()), ("Identifier", ptr.into()), ("AdditiveExpression", format!("{size} - 1"))],
        ),
        2 => (
            "snprintf",
            format!("snprintf ( buf , {size} , \"%s\" , {ptr} )"),
            vec![
                ("Identifier", "buf".into()),
                ("PrimaryExpression", size.to_string()),
                ("PrimaryExpression", "\"%s\"".into()),
                ("Identifier", ptr.into()),
            ],
        ),
        _ => ("strcpy", "strcpy ( buf , \"default\" )".into(), vec![("Identifier", "buf".into()), ("PrimaryExpression", "\"default\"".into())]),
    };
    let copy = b.statement(body, "ExpressionStatement", &format!("{text} ;"));
    let call = b.add(Some(copy), "CallExpression", &text);
    let callee_node = b.add(Some(call), "Callee", callee);
    b.leaf(callee_node, "Identifier", callee);
    let arg_refs: Vec<(&str, &str)> = args.iter().map(|(t, c)| (*t, c.as_str())).collect();
    b.copy_args(copy, call, &arg_refs);

    while b.node_count() + MAX_FILLER + RETURN <= target {
        b.filler(body);
    }
    let v = b.pick_int();
    let ret = b.statement(body, "ReturnStatement", &format!("return {v} ;"));
    b.leaf(ret, "Identifier", &v);
    b.uses(ret, &v);

    // control flow follows statement order; an if also falls through past its body
    let mut cfg_edges = vec![RawEdge::new(root, b.flow[0], EdgeKind::Cfg)];
    for w in b.flow.windows(2) {
        cfg_edges.push(RawEdge::new(w[0], w[1], EdgeKind::Cfg));
    }
    for (i, &s) in b.flow.iter().enumerate() {
        if b.nodes[s as usize].node_type == "IfStatement" && i + 2 < b.flow.len() {
            cfg_edges.push(RawEdge::new(s, b.flow[i + 2], EdgeKind::Cfg));
        }
    }
    b.edges.extend(cfg_edges);
    let ncs: Vec<RawEdge> = b.leaves.windows(2).map(|w| RawEdge::new(w[0], w[1], EdgeKind::Ncs)).collect();
    b.edges.extend(ncs);

    let label = if vulnerable { Label::Vulnerable } else { Label::NonVulnerable };
    let g = build_graph(b.nodes, b.edges, name, Some(label)).expect("generated graph is well formed");
    (g, vulnerable.then_some(copy))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_is_balanced() {
        let s = generate_synthetic_corpus(2, 1).unwrap();
        let labels: Vec<_> = s.corpus.graphs.iter().map(|g| g.label().unwrap()).collect();
        assert!(labels.contains(&Label::Vulnerable) && labels.contains(&Label::NonVulnerable));
        assert!(generate_synthetic_corpus(1, 1).is_err());
    }

    #[test]
    fn node_counts_within_range() {
        let s = generate_synthetic_corpus(200, 3).unwrap();
        for g in &s.corpus.graphs {
            assert!((MIN_NODES..=MAX_NODES).contains(&g.num_nodes()), "{}", g.num_nodes());
        }
    }
}
