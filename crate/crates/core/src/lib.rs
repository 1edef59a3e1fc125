//! Code structure graphs for vulnerability detection.
//!
//! A function is represented as a directed multigraph whose nodes are AST
//! nodes and whose edges carry one of the relation kinds AST, CFG, DFG or NCS
//! (plus open-ended extension kinds). This crate holds the graph model, the
//! JSON exchange format, the type- and variable-based simplification passes,
//! corpus statistics, and the token-averaging node feature initializer.

pub mod embed;
pub mod fixtures;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod random;
pub mod simplify;

pub use graph::{CodeStructureGraph, Edge, EdgeKind, GraphError, Label, Node, NodeId, RawEdge, RawNode};
pub use io::{Corpus, IoError};
pub use simplify::{MergeRule, MergeRuleTable, SimplificationTrace};
