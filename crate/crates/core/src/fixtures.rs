//! Hand-encoded reference graphs.

use crate::graph::CodeStructureGraph;
use crate::io::parse_graph;

/// Declaration statement with an `IdentifierDecl` child that type-based
/// simplification folds away.
pub const FIG3: &str = include_str!("../tests/fixtures/fig3.json");
/// `FIG3` after type-based simplification.
pub const FIG3_SIMPLIFIED: &str = include_str!("../tests/fixtures/fig3_simplified.json");
/// Two statements that both use the variable `str`.
pub const FIG4: &str = include_str!("../tests/fixtures/fig4.json");

pub fn fig3() -> CodeStructureGraph {
    parse_graph(FIG3.as_bytes()).expect("fixture parses")
}

pub fn fig3_simplified() -> CodeStructureGraph {
    parse_graph(FIG3_SIMPLIFIED.as_bytes()).expect("fixture parses")
}

pub fn fig4() -> CodeStructureGraph {
    parse_graph(FIG4.as_bytes()).expect("fixture parses")
}
