//! Incoming-edge index of a graph, split by relation.

use ample_core::graph::{CodeStructureGraph, EdgeKind};

use crate::ModelError;

/// CSR incoming-edge lists. Sources of each destination keep edge order.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphTopology {
    pub num_nodes: usize,
    /// `rel_offsets[r][j]..rel_offsets[r][j + 1]` indexes `rel_sources[r]`.
    pub rel_offsets: Vec<Vec<usize>>,
    pub rel_sources: Vec<Vec<usize>>,
    /// In-edges over all relations jointly (the attention neighborhood).
    pub offsets: Vec<usize>,
    pub sources: Vec<usize>,
}

impl GraphTopology {
    /// Messages flow `src -> dst`, or `dst -> src` when `reverse` is set.
    pub fn new(g: &CodeStructureGraph, relations: &[EdgeKind], reverse: bool) -> Result<Self, ModelError> {
        let n = g.num_nodes();
        let mut per_rel: Vec<Vec<Vec<usize>>> = vec![vec![Vec::new(); n]; relations.len()];
        let mut all: Vec<Vec<usize>> = vec![Vec::new(); n];
        for e in g.edges() {
            let r = relations
                .iter()
                .position(|k| *k == e.kind)
                .ok_or_else(|| ModelError::UnknownRelation(e.kind.name()))?;
            let (src, dst) = if reverse { (e.dst.0, e.src.0) } else { (e.src.0, e.dst.0) };
            per_rel[r][dst].push(src);
            all[dst].push(src);
        }
        let (rel_offsets, rel_sources) = per_rel.into_iter().map(csr).unzip();
        let (offsets, sources) = csr(all);
        Ok(GraphTopology { num_nodes: n, rel_offsets, rel_sources, offsets, sources })
    }

    pub fn num_relations(&self) -> usize {
        self.rel_offsets.len()
    }

    pub fn in_sources(&self, dst: usize) -> &[usize] {
        &self.sources[self.offsets[dst]..self.offsets[dst + 1]]
    }

    pub fn rel_in_sources(&self, rel: usize, dst: usize) -> &[usize] {
        &self.rel_sources[rel][self.rel_offsets[rel][dst]..self.rel_offsets[rel][dst + 1]]
    }

    pub fn num_in_edges(&self) -> usize {
        self.sources.len()
    }
}

fn csr(lists: Vec<Vec<usize>>) -> (Vec<usize>, Vec<usize>) {
    let mut offsets = Vec::with_capacity(lists.len() + 1);
    let mut flat = Vec::new();
    offsets.push(0);
    for l in lists {
        flat.extend(l);
        offsets.push(flat.len());
    }
    (offsets, flat)
}
