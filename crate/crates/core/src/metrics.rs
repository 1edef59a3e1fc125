//! Simplification rates, node distances and classification scores.

use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::CodeStructureGraph;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("simplified graph has more {what} ({after}) than the original ({before})")]
    NegativeRate { what: &'static str, before: usize, after: usize },
    #[error("prediction and label lists differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no predictions to score")]
    EmptyInput,
    #[error("value {0} is not a 0/1 class")]
    NotBinary(u8),
}

/// Fraction of nodes and edges removed by simplification.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimplificationStats {
    pub node_rate: f64,
    pub edge_rate: f64,
}

fn reduction_rate(what: &'static str, before: usize, after: usize) -> Result<f64, MetricsError> {
    if after > before {
        return Err(MetricsError::NegativeRate { what, before, after });
    }
    if before == 0 {
        return Ok(0.0);
    }
    Ok((before - after) as f64 / before as f64)
}

pub fn simplification_rates(
    original: &CodeStructureGraph,
    simplified: &CodeStructureGraph,
) -> Result<SimplificationStats, MetricsError> {
    Ok(SimplificationStats {
        node_rate: reduction_rate("nodes", original.num_nodes(), simplified.num_nodes())?,
        edge_rate: reduction_rate("edges", original.num_edges(), simplified.num_edges())?,
    })
}

/// Shortest-path statistics over reachable ordered pairs `(a, b)`, `a != b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceStats {
    pub avg_distance: f64,
    pub max_distance: usize,
    /// Number of reachable ordered pairs the average runs over.
    pub pairs: usize,
}

/// Unweighted BFS distances from `src` over `adj`; `usize::MAX` = unreachable.
pub fn bfs_distances(adj: &[Vec<usize>], src: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; adj.len()];
    dist[src] = 0;
    let mut queue = VecDeque::from([src]);
    while let Some(u) = queue.pop_front() {
        for &v in &adj[u] {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    dist
}

/// All-pairs distances over the undirected view of every edge kind.
pub fn all_pairs_distances(g: &CodeStructureGraph) -> Vec<Vec<usize>> {
    let adj = g.undirected_adjacency();
    (0..adj.len()).map(|s| bfs_distances(&adj, s)).collect()
}

pub fn node_distances(g: &CodeStructureGraph) -> DistanceStats {
    distance_stats(&all_pairs_distances(g))
}

/// Summarizes a distance matrix (`usize::MAX` marks unreachable pairs).
pub fn distance_stats(dist: &[Vec<usize>]) -> DistanceStats {
    let mut total: u64 = 0;
    let mut pairs = 0usize;
    let mut max = 0usize;
    for (a, row) in dist.iter().enumerate() {
        for (b, &d) in row.iter().enumerate() {
            if a != b && d != usize::MAX {
                total += d as u64;
                pairs += 1;
                max = max.max(d);
            }
        }
    }
    let avg = if pairs == 0 { 0.0 } else { total as f64 / pairs as f64 };
    DistanceStats { avg_distance: avg, max_distance: max, pairs }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn scores(&self) -> ClassificationScores {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(self.tp, self.tp + self.fp);
        let recall = ratio(self.tp, self.tp + self.fn_);
        // 2PR / (P + R) with a single rounding
        let f1 = ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_);
        ClassificationScores {
            accuracy: ratio(self.tp + self.tn, self.total()),
            precision,
            recall,
            f1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationScores {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Counts the confusion matrix with 1 = vulnerable = positive.
pub fn confusion_matrix(predictions: &[u8], labels: &[u8]) -> Result<ConfusionMatrix, MetricsError> {
    if predictions.len() != labels.len() {
        return Err(MetricsError::LengthMismatch(predictions.len(), labels.len()));
    }
    if predictions.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &y) in predictions.iter().zip(labels) {
        match (p, y) {
            (1, 1) => cm.tp += 1,
            (1, 0) => cm.fp += 1,
            (0, 0) => cm.tn += 1,
            (0, 1) => cm.fn_ += 1,
            (0 | 1, bad) | (bad, _) => return Err(MetricsError::NotBinary(bad)),
        }
    }
    Ok(cm)
}

pub fn classification_metrics(predictions: &[u8], labels: &[u8]) -> Result<ClassificationScores, MetricsError> {
    Ok(confusion_matrix(predictions, labels)?.scores())
}

/// Before/after numbers for one graph; one CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphReport {
    pub id: String,
    pub nodes_before: usize,
    pub nodes_after: usize,
    pub edges_before: usize,
    pub edges_after: usize,
    pub node_rate: f64,
    pub edge_rate: f64,
    pub avg_dist_before: f64,
    pub avg_dist_after: f64,
    pub max_dist_before: usize,
    pub max_dist_after: usize,
}

impl GraphReport {
    pub fn new(
        id: impl Into<String>,
        original: &CodeStructureGraph,
        simplified: &CodeStructureGraph,
    ) -> Result<Self, MetricsError> {
        let rates = simplification_rates(original, simplified)?;
        let before = node_distances(original);
        let after = node_distances(simplified);
        Ok(GraphReport {
            id: id.into(),
            nodes_before: original.num_nodes(),
            nodes_after: simplified.num_nodes(),
            edges_before: original.num_edges(),
            edges_after: simplified.num_edges(),
            node_rate: rates.node_rate,
            edge_rate: rates.edge_rate,
            avg_dist_before: before.avg_distance,
            avg_dist_after: after.avg_distance,
            max_dist_before: before.max_distance,
            max_dist_after: after.max_distance,
        })
    }
}

/// Corpus-level means over per-graph reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub graphs: usize,
    pub node_rate: f64,
    pub edge_rate: f64,
    pub avg_dist_before: f64,
    pub avg_dist_after: f64,
    pub max_dist_before: f64,
    pub max_dist_after: f64,
}

impl CorpusSummary {
    pub fn from_reports(rows: &[GraphReport]) -> Self {
        let n = rows.len().max(1) as f64;
        let mean = |f: &dyn Fn(&GraphReport) -> f64| rows.iter().map(f).sum::<f64>() / n;
        CorpusSummary {
            graphs: rows.len(),
            node_rate: mean(&|r| r.node_rate),
            edge_rate: mean(&|r| r.edge_rate),
            avg_dist_before: mean(&|r| r.avg_dist_before),
            avg_dist_after: mean(&|r| r.avg_dist_after),
            max_dist_before: mean(&|r| r.max_dist_before as f64),
            max_dist_after: mean(&|r| r.max_dist_after as f64),
        }
    }

    /// Relative drop of the mean average / maximum node distance.
    pub fn distance_drops(&self) -> (f64, f64) {
        let drop = |before: f64, after: f64| if before > 0.0 { (before - after) / before } else { 0.0 };
        (
            drop(self.avg_dist_before, self.avg_dist_after),
            drop(self.max_dist_before, self.max_dist_after),
        )
    }

    /// One-line human summary, percentages with two decimals.
    pub fn describe(&self) -> String {
        let (avg_drop, max_drop) = self.distance_drops();
        format!(
            "{} graphs: average node simplification rate {}, edge simplification rate {}; \
             average node distance drops by {}, maximum node distance by {}",
            self.graphs,
            percent(self.node_rate),
            percent(self.edge_rate),
            percent(avg_drop),
            percent(max_drop)
        )
    }
}

/// `0.41637` -> `"41.64%"`.
pub fn percent(fraction: f64) -> String {
    format!("{:.2}%", fraction * 100.0)
}

pub const CSV_HEADER: &str = "id,nodes_before,nodes_after,edges_before,edges_after,node_rate,edge_rate,\
avg_dist_before,avg_dist_after,max_dist_before,max_dist_after";

/// CSV report: header, one row per graph, then a `summary` row of means.
pub fn report_csv(rows: &[GraphReport]) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{},{}",
            r.id,
            r.nodes_before,
            r.nodes_after,
            r.edges_before,
            r.edges_after,
            r.node_rate,
            r.edge_rate,
            r.avg_dist_before,
            r.avg_dist_after,
            r.max_dist_before,
            r.max_dist_after
        )
        .unwrap();
    }
    let n = rows.len().max(1) as f64;
    let sum = |f: &dyn Fn(&GraphReport) -> f64| rows.iter().map(f).sum::<f64>();
    let s = CorpusSummary::from_reports(rows);
    writeln!(
        out,
        "summary,{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
        sum(&|r| r.nodes_before as f64) / n,
        sum(&|r| r.nodes_after as f64) / n,
        sum(&|r| r.edges_before as f64) / n,
        sum(&|r| r.edges_after as f64) / n,
        s.node_rate,
        s.edge_rate,
        s.avg_dist_before,
        s.avg_dist_after,
        s.max_dist_before,
        s.max_dist_after
    )
    .unwrap();
    out
}
