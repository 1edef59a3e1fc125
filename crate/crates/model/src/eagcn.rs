//! Edge-aware graph convolution.
//!
//! Node features are rows (`|V| x d`) and every weight multiplies from the
//! right, so a layer with input `H` computes
//!
//! ```text
//! M_i  = sum_r a_r * mean_{j in N_r(i)} H_j          per-relation neighbor means
//! P    = act(M V + H W0)                            relational propagation
//! w_e  = softmax_{e into i}(P_src^k . P_i^k / sqrt(d/heads))   per head k
//! C_i^k = sum_{e into i} w_e P_src^k
//! A    = concat_k(C^k) Wh + H                       attention + residual
//! out  = act(A W1 + b1) W2 + b2 + A                 feed-forward + residual
//! ```
//!
//! Relations without incoming edges at a node contribute nothing there.

use ndarray::{s, Array1, Array2, ArrayView1};
use rand::Rng;
use serde::{Deserialize, Serialize};

use ample_core::embed::NodeMatrix;
use ample_core::graph::{CodeStructureGraph, EdgeKind};

use crate::nn::{column_sums, softmax, xavier, Activation};
use crate::topology::GraphTopology;
use crate::ModelError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EaGcnConfig {
    pub layers: usize,
    pub heads: usize,
    /// Node feature width `d`, constant across layers.
    pub hidden: usize,
    /// Inner width of the feed-forward block.
    pub ff_hidden: usize,
    pub activation: Activation,
    /// Aggregate from out-neighbors instead of in-neighbors.
    pub reverse_edges: bool,
    pub relations: Vec<EdgeKind>,
}

impl Default for EaGcnConfig {
    fn default() -> Self {
        EaGcnConfig {
            layers: 2,
            heads: 10,
            hidden: 100,
            ff_hidden: 100,
            activation: Activation::Relu,
            reverse_edges: false,
            relations: vec![EdgeKind::Ast, EdgeKind::Cfg, EdgeKind::Dfg, EdgeKind::Ncs],
        }
    }
}

impl EaGcnConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.layers == 0 || self.heads == 0 || self.hidden == 0 || self.ff_hidden == 0 {
            return Err(ModelError::InvalidConfig("layers, heads and widths must be positive".into()));
        }
        if self.hidden % self.heads != 0 {
            return Err(ModelError::InvalidConfig(format!(
                "hidden width {} is not divisible by {} heads",
                self.hidden, self.heads
            )));
        }
        if self.relations.is_empty() {
            return Err(ModelError::InvalidConfig("at least one relation is required".into()));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.hidden / self.heads
    }

    pub fn topology(&self, g: &CodeStructureGraph) -> Result<GraphTopology, ModelError> {
        GraphTopology::new(g, &self.relations, self.reverse_edges)
    }
}

/// Learnable tensors of one layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EaGcnLayerParams {
    /// One coefficient per relation.
    pub relation_weights: Array1<f64>,
    /// Shared relation transform `V` (`d x d`).
    pub transform: Array2<f64>,
    /// Self-connection `W0` (`d x d`).
    pub self_loop: Array2<f64>,
    /// Head output projection `Wh` (`d x d`).
    pub head_proj: Array2<f64>,
    pub ff_in: Array2<f64>,
    pub ff_in_bias: Array1<f64>,
    pub ff_out: Array2<f64>,
    pub ff_out_bias: Array1<f64>,
}

impl EaGcnLayerParams {
    pub fn random<R: Rng>(cfg: &EaGcnConfig, rng: &mut R) -> Self {
        let d = cfg.hidden;
        EaGcnLayerParams {
            relation_weights: Array1::ones(cfg.relations.len()),
            transform: xavier(rng, d, d),
            self_loop: xavier(rng, d, d),
            head_proj: xavier(rng, d, d),
            ff_in: xavier(rng, d, cfg.ff_hidden),
            ff_in_bias: Array1::zeros(cfg.ff_hidden),
            ff_out: xavier(rng, cfg.ff_hidden, d),
            ff_out_bias: Array1::zeros(d),
        }
    }

    pub fn zeros(cfg: &EaGcnConfig) -> Self {
        let d = cfg.hidden;
        EaGcnLayerParams {
            relation_weights: Array1::zeros(cfg.relations.len()),
            transform: Array2::zeros((d, d)),
            self_loop: Array2::zeros((d, d)),
            head_proj: Array2::zeros((d, d)),
            ff_in: Array2::zeros((d, cfg.ff_hidden)),
            ff_in_bias: Array1::zeros(cfg.ff_hidden),
            ff_out: Array2::zeros((cfg.ff_hidden, d)),
            ff_out_bias: Array1::zeros(d),
        }
    }

    pub fn check_shapes(&self, cfg: &EaGcnConfig) -> Result<(), ModelError> {
        let d = cfg.hidden;
        let f = cfg.ff_hidden;
        let ok = self.relation_weights.len() == cfg.relations.len()
            && self.transform.dim() == (d, d)
            && self.self_loop.dim() == (d, d)
            && self.head_proj.dim() == (d, d)
            && self.ff_in.dim() == (d, f)
            && self.ff_in_bias.len() == f
            && self.ff_out.dim() == (f, d)
            && self.ff_out_bias.len() == d;
        if ok {
            Ok(())
        } else {
            Err(ModelError::DimensionMismatch("EA-GCN layer parameters do not match the configuration".into()))
        }
    }

    /// Named mutable views of every tensor, in a fixed order.
    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![
            ("relation_weights", self.relation_weights.as_slice_mut().unwrap()),
            ("transform", self.transform.as_slice_mut().unwrap()),
            ("self_loop", self.self_loop.as_slice_mut().unwrap()),
            ("head_proj", self.head_proj.as_slice_mut().unwrap()),
            ("ff_in", self.ff_in.as_slice_mut().unwrap()),
            ("ff_in_bias", self.ff_in_bias.as_slice_mut().unwrap()),
            ("ff_out", self.ff_out.as_slice_mut().unwrap()),
            ("ff_out_bias", self.ff_out_bias.as_slice_mut().unwrap()),
        ]
    }

    pub fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("relation_weights", self.relation_weights.as_slice().unwrap()),
            ("transform", self.transform.as_slice().unwrap()),
            ("self_loop", self.self_loop.as_slice().unwrap()),
            ("head_proj", self.head_proj.as_slice().unwrap()),
            ("ff_in", self.ff_in.as_slice().unwrap()),
            ("ff_in_bias", self.ff_in_bias.as_slice().unwrap()),
            ("ff_out", self.ff_out.as_slice().unwrap()),
            ("ff_out_bias", self.ff_out_bias.as_slice().unwrap()),
        ]
    }
}

fn check_input(h: &NodeMatrix, topo: &GraphTopology, d: usize) -> Result<(), ModelError> {
    if h.nrows() != topo.num_nodes || h.ncols() != d {
        return Err(ModelError::DimensionMismatch(format!(
            "node matrix is {}x{}, expected {}x{d}",
            h.nrows(),
            h.ncols(),
            topo.num_nodes
        )));
    }
    Ok(())
}

/// Per-relation means of in-neighbor rows.
fn relation_means(h: &NodeMatrix, topo: &GraphTopology) -> Vec<Array2<f64>> {
    (0..topo.num_relations())
        .map(|r| {
            let mut agg = Array2::zeros(h.raw_dim());
            for dst in 0..topo.num_nodes {
                let srcs = topo.rel_in_sources(r, dst);
                if srcs.is_empty() {
                    continue;
                }
                let mut row = agg.row_mut(dst);
                for &src in srcs {
                    row += &h.row(src);
                }
                row /= srcs.len() as f64;
            }
            agg
        })
        .collect()
}

struct PropagateCache {
    means: Vec<Array2<f64>>,
    mixed: Array2<f64>,
    pre: Array2<f64>,
}

fn propagate_cached(
    h: &NodeMatrix,
    topo: &GraphTopology,
    p: &EaGcnLayerParams,
    act: Activation,
) -> (NodeMatrix, PropagateCache) {
    let means = relation_means(h, topo);
    let mut mixed = Array2::zeros(h.raw_dim());
    for (r, m) in means.iter().enumerate() {
        mixed.scaled_add(p.relation_weights[r], m);
    }
    let pre = mixed.dot(&p.transform) + h.dot(&p.self_loop);
    (act.map(&pre), PropagateCache { means, mixed, pre })
}

/// Relational propagation: `act(sum_r a_r * mean_{N_r(i)} H V + H W0)`.
pub fn relational_propagate(
    h: &NodeMatrix,
    topo: &GraphTopology,
    params: &EaGcnLayerParams,
    act: Activation,
) -> Result<NodeMatrix, ModelError> {
    check_input(h, topo, params.transform.nrows())?;
    if params.relation_weights.len() != topo.num_relations() {
        return Err(ModelError::DimensionMismatch("one relation weight per relation expected".into()));
    }
    Ok(propagate_cached(h, topo, params, act).0)
}

/// Attention weights of one head, flattened in `topo.sources` order: the
/// weights of destination `j` sit at `topo.offsets[j]..topo.offsets[j+1]`.
fn head_weights(h: &NodeMatrix, topo: &GraphTopology, head: usize, head_dim: usize) -> Vec<f64> {
    let cols = s![head * head_dim..(head + 1) * head_dim];
    let scale = (head_dim as f64).sqrt();
    let mut weights = Vec::with_capacity(topo.num_in_edges());
    for dst in 0..topo.num_nodes {
        let srcs = topo.in_sources(dst);
        if srcs.is_empty() {
            continue;
        }
        let q = h.slice(s![dst, ..]);
        let q = q.slice(cols);
        let scores: Vec<f64> = srcs
            .iter()
            .map(|&src| h.slice(s![src, ..]).slice(cols).dot(&q) / scale)
            .collect();
        weights.extend(softmax(&scores));
    }
    weights
}

/// Attention weights of `head` for every destination's incoming edges,
/// aligned with [`GraphTopology::in_sources`]. Destinations without
/// incoming edges get an empty list.
pub fn edge_attention_scores(h: &NodeMatrix, topo: &GraphTopology, head: usize, heads: usize) -> Vec<Vec<f64>> {
    assert!(head < heads, "head {head} out of range");
    let flat = head_weights(h, topo, head, h.ncols() / heads);
    (0..topo.num_nodes)
        .map(|j| flat[topo.offsets[j]..topo.offsets[j + 1]].to_vec())
        .collect()
}

struct AttentionCache {
    /// `weights[k]` flattened per head.
    weights: Vec<Vec<f64>>,
    concat: Array2<f64>,
    attended: Array2<f64>,
    ff_pre: Array2<f64>,
    ff_act: Array2<f64>,
}

fn attention_cached(
    p: &NodeMatrix,
    topo: &GraphTopology,
    params: &EaGcnLayerParams,
    h_prev: &NodeMatrix,
    cfg: &EaGcnConfig,
) -> (NodeMatrix, AttentionCache) {
    let hd = cfg.head_dim();
    let mut concat = Array2::zeros(p.raw_dim());
    let mut weights = Vec::with_capacity(cfg.heads);
    for k in 0..cfg.heads {
        let w = head_weights(p, topo, k, hd);
        let cols = s![k * hd..(k + 1) * hd];
        for dst in 0..topo.num_nodes {
            let range = topo.offsets[dst]..topo.offsets[dst + 1];
            let mut out = concat.slice_mut(s![dst, k * hd..(k + 1) * hd]);
            for (e, &src) in range.clone().zip(topo.in_sources(dst)) {
                out.scaled_add(w[e], &p.slice(s![src, ..]).slice(cols));
            }
        }
        weights.push(w);
    }
    let attended = concat.dot(&params.head_proj) + h_prev;
    let ff_pre = attended.dot(&params.ff_in) + &params.ff_in_bias;
    let ff_act = cfg.activation.map(&ff_pre);
    let out = ff_act.dot(&params.ff_out) + &params.ff_out_bias + &attended;
    (out, AttentionCache { weights, concat, attended, ff_pre, ff_act })
}

/// Multi-head edge attention with output projection, residual from the
/// layer input `h_prev`, and the residual feed-forward block.
pub fn attention_aggregate(
    h: &NodeMatrix,
    topo: &GraphTopology,
    params: &EaGcnLayerParams,
    h_prev: &NodeMatrix,
    cfg: &EaGcnConfig,
) -> Result<NodeMatrix, ModelError> {
    check_input(h, topo, cfg.hidden)?;
    check_input(h_prev, topo, cfg.hidden)?;
    params.check_shapes(cfg)?;
    Ok(attention_cached(h, topo, params, h_prev, cfg).0)
}

/// Intermediate values of one layer, kept for the backward pass.
pub struct LayerCache {
    input: NodeMatrix,
    propagated: NodeMatrix,
    prop: PropagateCache,
    attn: AttentionCache,
}

/// Forward pass through all layers, keeping what the backward pass needs.
pub fn forward_cached(
    topo: &GraphTopology,
    h0: &NodeMatrix,
    cfg: &EaGcnConfig,
    params: &[EaGcnLayerParams],
) -> Result<(NodeMatrix, Vec<LayerCache>), ModelError> {
    cfg.validate()?;
    if params.len() != cfg.layers {
        return Err(ModelError::DimensionMismatch(format!(
            "{} layer parameter sets for {} layers",
            params.len(),
            cfg.layers
        )));
    }
    check_input(h0, topo, cfg.hidden)?;
    if topo.num_relations() != cfg.relations.len() {
        return Err(ModelError::DimensionMismatch("topology built for a different relation set".into()));
    }
    let mut h = h0.clone();
    let mut caches = Vec::with_capacity(cfg.layers);
    for layer in params {
        layer.check_shapes(cfg)?;
        let (propagated, prop) = propagate_cached(&h, topo, layer, cfg.activation);
        let (out, attn) = attention_cached(&propagated, topo, layer, &h, cfg);
        caches.push(LayerCache { input: h, propagated, prop, attn });
        h = out;
    }
    Ok((h, caches))
}

/// `|V| x d` edge-enhanced node representations.
pub fn eagcn_forward(
    g: &CodeStructureGraph,
    h0: &NodeMatrix,
    cfg: &EaGcnConfig,
    params: &[EaGcnLayerParams],
) -> Result<NodeMatrix, ModelError> {
    let topo = cfg.topology(g)?;
    Ok(forward_cached(&topo, h0, cfg, params)?.0)
}

/// Backpropagates `d_out` (gradient w.r.t. the last layer's output) and
/// accumulates parameter gradients into `grads`. Returns the gradient
/// w.r.t. the input features.
pub fn backward(
    topo: &GraphTopology,
    cfg: &EaGcnConfig,
    params: &[EaGcnLayerParams],
    caches: &[LayerCache],
    d_out: &NodeMatrix,
    grads: &mut [EaGcnLayerParams],
) -> NodeMatrix {
    let mut d_h = d_out.clone();
    for ((layer, cache), grad) in params.iter().zip(caches).zip(grads.iter_mut()).rev() {
        d_h = layer_backward(topo, cfg, layer, cache, &d_h, grad);
    }
    d_h
}

fn layer_backward(
    topo: &GraphTopology,
    cfg: &EaGcnConfig,
    p: &EaGcnLayerParams,
    c: &LayerCache,
    d_out: &NodeMatrix,
    g: &mut EaGcnLayerParams,
) -> NodeMatrix {
    let act = cfg.activation;
    let hd = cfg.head_dim();
    let scale = (hd as f64).sqrt();

    // out = act(A W1 + b1) W2 + b2 + A
    g.ff_out += &c.attn.ff_act.t().dot(d_out);
    g.ff_out_bias += &column_sums(d_out);
    let d_ff_pre = act.backprop(&c.attn.ff_pre, &d_out.dot(&p.ff_out.t()));
    g.ff_in += &c.attn.attended.t().dot(&d_ff_pre);
    g.ff_in_bias += &column_sums(&d_ff_pre);
    let d_attended = d_out + &d_ff_pre.dot(&p.ff_in.t());

    // A = concat Wh + H
    g.head_proj += &c.attn.concat.t().dot(&d_attended);
    let d_concat = d_attended.dot(&p.head_proj.t());
    let mut d_input = d_attended;

    // attention over incoming edges, per head
    let prop = &c.propagated;
    let mut d_prop = Array2::<f64>::zeros(prop.raw_dim());
    for k in 0..cfg.heads {
        let w = &c.attn.weights[k];
        let cols = k * hd..(k + 1) * hd;
        for dst in 0..topo.num_nodes {
            let srcs = topo.in_sources(dst);
            if srcs.is_empty() {
                continue;
            }
            let base = topo.offsets[dst];
            let d_c: ArrayView1<f64> = d_concat.slice(s![dst, cols.clone()]);
            let q = prop.slice(s![dst, cols.clone()]).to_owned();
            // dL/dw_e, then through the softmax
            let d_w: Vec<f64> = srcs
                .iter()
                .map(|&src| d_c.dot(&prop.slice(s![src, cols.clone()])))
                .collect();
            let mean: f64 = d_w.iter().enumerate().map(|(e, dw)| w[base + e] * dw).sum();
            let mut d_q = Array1::<f64>::zeros(hd);
            for (e, &src) in srcs.iter().enumerate() {
                let we = w[base + e];
                let d_score = we * (d_w[e] - mean) / scale;
                let key = prop.slice(s![src, cols.clone()]).to_owned();
                let mut d_src = d_prop.slice_mut(s![src, cols.clone()]);
                d_src.scaled_add(we, &d_c);
                d_src.scaled_add(d_score, &q);
                d_q.scaled_add(d_score, &key);
            }
            let mut d_dst = d_prop.slice_mut(s![dst, cols.clone()]);
            d_dst += &d_q;
        }
    }

    // P = act(M V + H W0), M = sum_r a_r mean_r(H)
    let d_pre = act.backprop(&c.prop.pre, &d_prop);
    g.transform += &c.prop.mixed.t().dot(&d_pre);
    g.self_loop += &c.input.t().dot(&d_pre);
    d_input += &d_pre.dot(&p.self_loop.t());
    let d_mixed = d_pre.dot(&p.transform.t());
    for (r, mean) in c.prop.means.iter().enumerate() {
        g.relation_weights[r] += (mean * &d_mixed).sum();
        let a = p.relation_weights[r];
        for dst in 0..topo.num_nodes {
            let srcs = topo.rel_in_sources(r, dst);
            if srcs.is_empty() {
                continue;
            }
            let coef = a / srcs.len() as f64;
            let row = d_mixed.row(dst).to_owned();
            for &src in srcs {
                d_input.row_mut(src).scaled_add(coef, &row);
            }
        }
    }
    d_input
}

/// Weight totals per destination, skipping destinations without in-edges.
pub fn weight_sums(weights: &[Vec<f64>]) -> Vec<f64> {
    weights.iter().filter(|w| !w.is_empty()).map(|w| w.iter().sum()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ample_core::graph::{build_graph, RawEdge, RawNode};
    use ndarray::array;

    fn cfg(d: usize, heads: usize) -> EaGcnConfig {
        EaGcnConfig { layers: 1, heads, hidden: d, ff_hidden: d, ..EaGcnConfig::default() }
    }

    fn graph(n: u64, edges: &[(u64, u64, EdgeKind)]) -> CodeStructureGraph {
        build_graph(
            (0..n).map(|i| RawNode::new(i, "N", "")).collect(),
            edges.iter().map(|(a, b, k)| RawEdge::new(*a, *b, k.clone())).collect(),
            "t",
            None,
        )
        .unwrap()
    }

    #[test]
    fn single_node_identity_self_loop() {
        let c = cfg(2, 1);
        let g = graph(1, &[]);
        let topo = c.topology(&g).unwrap();
        let mut p = EaGcnLayerParams::zeros(&c);
        p.self_loop = Array2::eye(2);
        let h = array![[0.5, 2.0]];
        assert_eq!(relational_propagate(&h, &topo, &p, Activation::Relu).unwrap(), h);
    }

    #[test]
    fn zero_relation_weights_ignore_edges() {
        let c = cfg(2, 1);
        let g = graph(3, &[(0, 1, EdgeKind::Ast), (2, 1, EdgeKind::Cfg)]);
        let topo = c.topology(&g).unwrap();
        let mut p = EaGcnLayerParams::zeros(&c);
        p.transform = array![[1.0, 2.0], [3.0, 4.0]];
        p.self_loop = array![[0.5, -1.0], [1.0, 0.25]];
        let h = array![[1.0, -2.0], [0.5, 0.5], [3.0, 1.0]];
        let out = relational_propagate(&h, &topo, &p, Activation::Relu).unwrap();
        assert_eq!(out, h.dot(&p.self_loop).mapv(|x: f64| x.max(0.0)));
    }

    #[test]
    fn two_node_hand_computed() {
        // one AST edge 0 -> 1; node 1 receives a_ast * h0 V
        let c = cfg(2, 1);
        let g = graph(2, &[(0, 1, EdgeKind::Ast)]);
        let topo = c.topology(&g).unwrap();
        let mut p = EaGcnLayerParams::zeros(&c);
        p.relation_weights = array![0.5, 1.0, 1.0, 1.0];
        p.transform = array![[1.0, 2.0], [0.0, -1.0]];
        p.self_loop = array![[2.0, 0.0], [1.0, 1.0]];
        let h = array![[1.0, 3.0], [-1.0, 2.0]];
        let out = relational_propagate(&h, &topo, &p, Activation::Relu).unwrap();
        // node 0: h0 W0 = (1*2 + 3*1, 3) = (5, 3)
        // node 1: 0.5 * h0 V = 0.5 * (1, 2 - 3) = (0.5, -0.5); h1 W0 = (-2 + 2, 2) = (0, 2)
        assert_eq!(out, array![[5.0, 3.0], [0.5, 1.5]]);
    }

    #[test]
    fn attention_weight_cases() {
        let g = graph(4, &[(0, 3, EdgeKind::Cfg), (1, 2, EdgeKind::Cfg), (0, 2, EdgeKind::Dfg)]);
        let c = cfg(2, 1);
        let topo = c.topology(&g).unwrap();
        let h = array![[1.0, 0.0], [0.0, 1.0], [1.0, 0.0], [5.0, 5.0]];
        let w = edge_attention_scores(&h, &topo, 0, 1);
        assert!(w[0].is_empty() && w[1].is_empty());
        assert_eq!(w[3], vec![1.0]);
        // sources of node 2 in edge order: 1 (0,1) then 0 (1,0); h2 = (1, 0)
        let e = (1.0f64 / 2f64.sqrt()).exp();
        assert!((w[2][1] - e / (e + 1.0)).abs() < 1e-15);
        assert!((w[2][1] - 0.6698).abs() < 1e-4);
        assert!((w[2][0] - 1.0 / (e + 1.0)).abs() < 1e-15);

        let same = array![[1.0, 2.0], [1.0, 2.0], [0.3, 0.1], [0.0, 0.0]];
        assert_eq!(edge_attention_scores(&same, &topo, 0, 1)[2], vec![0.5, 0.5]);
    }

    #[test]
    fn isolated_node_is_pure_residual_ff() {
        let c = cfg(2, 2);
        let g = graph(1, &[]);
        let topo = c.topology(&g).unwrap();
        let mut rng = rand::thread_rng();
        let p = EaGcnLayerParams::random(&c, &mut rng);
        let h_prev = array![[0.3, -0.7]];
        let h = array![[9.0, 9.0]];
        let out = attention_aggregate(&h, &topo, &p, &h_prev, &c).unwrap();
        let ff = (h_prev.dot(&p.ff_in) + &p.ff_in_bias).mapv(|x: f64| x.max(0.0)).dot(&p.ff_out) + &p.ff_out_bias;
        assert_eq!(out, ff + &h_prev);
    }

    #[test]
    fn zero_feed_forward_returns_attended() {
        let c = cfg(4, 2);
        let g = graph(3, &[(0, 1, EdgeKind::Ast), (2, 1, EdgeKind::Cfg)]);
        let topo = c.topology(&g).unwrap();
        let mut rng = rand::thread_rng();
        let mut p = EaGcnLayerParams::random(&c, &mut rng);
        p.ff_in.fill(0.0);
        p.ff_out.fill(0.0);
        let h = Array2::from_shape_fn((3, 4), |(i, j)| (i * 4 + j) as f64 * 0.1);
        let h_prev = Array2::from_shape_fn((3, 4), |(i, j)| (i + j) as f64 * -0.2);
        let (out, cache) = attention_cached(&h, &topo, &p, &h_prev, &c);
        assert_eq!(out, cache.attended);
    }

    #[test]
    fn rejects_bad_shapes_and_relations() {
        let c = cfg(4, 2);
        let g = graph(2, &[(0, 1, EdgeKind::Other("CDG".into()))]);
        assert!(matches!(c.topology(&g), Err(ModelError::UnknownRelation(_))));
        let g = graph(2, &[]);
        let topo = c.topology(&g).unwrap();
        let p = EaGcnLayerParams::zeros(&c);
        let h = Array2::zeros((2, 3));
        assert!(matches!(
            relational_propagate(&h, &topo, &p, Activation::Relu),
            Err(ModelError::DimensionMismatch(_))
        ));
        let bad = EaGcnConfig { hidden: 5, heads: 2, ..c };
        assert!(bad.validate().is_err());
    }
}
