//! `ample-graph/1` JSON documents and corpus directories.
//!
//! One graph per UTF-8 file:
//!
//! ```text
//! { "version": "ample-graph/1", "function": "f", "label": 0|1|null,
//!   "nodes": [{"id", "type", "code", "line", "is_statement"}, ...],
//!   "edges": [{"src", "dst", "kind", "label"}, ...] }
//! ```
//!
//! Node ids on the wire are exporter ids; they are re-indexed densely in
//! document order on parse. Unknown fields are ignored.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{build_graph, CodeStructureGraph, EdgeKind, GraphError, Label, RawEdge, RawNode};

pub const FORMAT_VERSION: &str = "ample-graph/1";

#[derive(Debug, Error)]
pub enum IoError {
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("schema violation: {0}")]
    SchemaViolation(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("corpus at {0} contains no valid graph documents")]
    EmptyCorpus(PathBuf),
    #[error("{path}: {source}")]
    Fs {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl IoError {
    fn fs(path: &Path, source: std::io::Error) -> Self {
        IoError::Fs { path: path.to_path_buf(), source }
    }
}

#[derive(Serialize, Deserialize)]
struct GraphDocument {
    version: String,
    function: String,
    label: Option<u8>,
    nodes: Vec<NodeDoc>,
    edges: Vec<EdgeDoc>,
}

#[derive(Serialize, Deserialize)]
struct NodeDoc {
    id: u64,
    #[serde(rename = "type")]
    node_type: String,
    #[serde(default)]
    code: String,
    #[serde(default)]
    line: Option<u32>,
    #[serde(default)]
    is_statement: bool,
}

#[derive(Serialize, Deserialize)]
struct EdgeDoc {
    src: u64,
    dst: u64,
    kind: String,
    #[serde(default)]
    label: Option<String>,
}

pub fn parse_graph(text: &[u8]) -> Result<CodeStructureGraph, IoError> {
    let doc: GraphDocument = serde_json::from_slice(text).map_err(|e| {
        if e.is_data() {
            IoError::SchemaViolation(e.to_string())
        } else {
            IoError::MalformedJson(e.to_string())
        }
    })?;
    if doc.version != FORMAT_VERSION {
        return Err(IoError::SchemaViolation(format!(
            "unsupported version `{}`, expected `{FORMAT_VERSION}`",
            doc.version
        )));
    }
    let label = match doc.label {
        None => None,
        Some(v) => Some(
            Label::from_u8(v)
                .ok_or_else(|| IoError::SchemaViolation(format!("label must be 0, 1 or null, got {v}")))?,
        ),
    };
    let nodes = doc
        .nodes
        .into_iter()
        .map(|n| RawNode {
            id: n.id,
            node_type: n.node_type,
            code: n.code,
            line: n.line,
            is_statement: n.is_statement,
        })
        .collect();
    let edges = doc
        .edges
        .into_iter()
        .map(|e| {
            let kind: EdgeKind = e
                .kind
                .parse()
                .map_err(|err: crate::graph::UnknownEdgeKind| IoError::SchemaViolation(err.to_string()))?;
            Ok(RawEdge { src: e.src, dst: e.dst, kind, label: e.label })
        })
        .collect::<Result<Vec<_>, IoError>>()?;
    Ok(build_graph(nodes, edges, doc.function, label)?)
}

/// Pretty-printed document; nodes in id order, edges in insertion order.
pub fn serialize_graph(g: &CodeStructureGraph) -> Vec<u8> {
    let nodes = g.nodes();
    let doc = GraphDocument {
        version: FORMAT_VERSION.to_string(),
        function: g.function_name().to_string(),
        label: g.label().map(Label::as_u8),
        nodes: nodes
            .iter()
            .map(|n| NodeDoc {
                id: n.orig_id,
                node_type: n.node_type.clone(),
                code: n.code.clone(),
                line: n.line,
                is_statement: n.is_statement,
            })
            .collect(),
        edges: g
            .edges()
            .iter()
            .map(|e| EdgeDoc {
                src: nodes[e.src.0].orig_id,
                dst: nodes[e.dst.0].orig_id,
                kind: e.kind.name(),
                label: e.label.clone(),
            })
            .collect(),
    };
    let mut out = serde_json::to_vec_pretty(&doc).expect("graph documents always serialize");
    out.push(b'\n');
    out
}

pub fn read_graph(path: &Path) -> Result<CodeStructureGraph, IoError> {
    let bytes = fs::read(path).map_err(|e| IoError::fs(path, e))?;
    parse_graph(&bytes)
}

pub fn write_graph(path: &Path, g: &CodeStructureGraph) -> Result<(), IoError> {
    fs::write(path, serialize_graph(g)).map_err(|e| IoError::fs(path, e))
}

/// A set of graphs plus per-file load failures.
#[derive(Debug, Clone, Default)]
pub struct Corpus {
    pub graphs: Vec<CodeStructureGraph>,
    /// Stem of the file each graph came from (or a generated name).
    pub names: Vec<String>,
    pub provenance: String,
    pub errors: Vec<(PathBuf, String)>,
}

impl Corpus {
    pub fn from_graphs(graphs: Vec<CodeStructureGraph>, provenance: impl Into<String>) -> Self {
        let names = (0..graphs.len()).map(|i| format!("g{i:05}")).collect();
        Corpus { graphs, names, provenance: provenance.into(), errors: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.graphs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graphs.is_empty()
    }

    pub fn is_fully_labeled(&self) -> bool {
        self.graphs.iter().all(|g| g.label().is_some())
    }

    pub fn summary(&self) -> String {
        let mut s = format!("{} graphs loaded from {}", self.graphs.len(), self.provenance);
        if !self.errors.is_empty() {
            s.push_str(&format!(", {} files rejected:", self.errors.len()));
            for (path, err) in &self.errors {
                s.push_str(&format!("\n  {}: {err}", path.display()));
            }
        }
        s
    }
}

/// Loads every `*.json` file in `dir` (non-recursive, sorted by name).
/// Files that fail to parse are recorded in [`Corpus::errors`].
pub fn load_corpus(dir: &Path) -> Result<Corpus, IoError> {
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| IoError::fs(dir, e))? {
        let path = entry.map_err(|e| IoError::fs(dir, e))?.path();
        if path.is_file() && path.extension().is_some_and(|ext| ext == "json") {
            paths.push(path);
        }
    }
    paths.sort();
    let parsed: Vec<_> = paths.par_iter().map(|p| read_graph(p)).collect();
    let mut corpus = Corpus { provenance: dir.display().to_string(), ..Corpus::default() };
    for (path, result) in paths.into_iter().zip(parsed) {
        match result {
            Ok(g) => {
                let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                corpus.names.push(stem);
                corpus.graphs.push(g);
            }
            Err(e) => corpus.errors.push((path, e.to_string())),
        }
    }
    if corpus.graphs.is_empty() {
        return Err(IoError::EmptyCorpus(dir.to_path_buf()));
    }
    Ok(corpus)
}

/// Writes one `<name>.json` per graph into `dir`, creating it if needed.
pub fn write_corpus(dir: &Path, corpus: &Corpus) -> Result<(), IoError> {
    fs::create_dir_all(dir).map_err(|e| IoError::fs(dir, e))?;
    for (g, name) in corpus.graphs.iter().zip(&corpus.names) {
        write_graph(&dir.join(format!("{name}.json")), g)?;
    }
    Ok(())
}
