//! Central finite-difference checks of the hand-written gradients.

use ndarray::Array2;

use ample_core::embed::{initial_node_matrix, HashingEmbedder, NodeMatrix};
use ample_core::graph::build_graph;
use ample_core::{CodeStructureGraph, EdgeKind, Label, RawEdge, RawNode};

use crate::eagcn::{self, EaGcnConfig};
use crate::ksr::{KsrConfig, Mode};
use crate::model::{GraphInput, Model, ModelConfig, ModelParams};
use crate::nn::Activation;
use crate::ModelError;

pub const DEFAULT_STEP: f64 = 1e-3;
/// Denominator floor for entries whose true gradient is essentially zero.
pub const DENOM_FLOOR: f64 = 1e-8;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(DENOM_FLOOR)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TensorCheck {
    pub name: String,
    pub entries: usize,
    /// Largest elementwise relative error.
    pub max_rel_error: f64,
    /// `|a - n| / max(|a|, |n|)` over the whole tensor (Euclidean norms).
    pub norm_rel_error: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GradCheckReport {
    pub tensors: Vec<TensorCheck>,
}

/// A tensor passes when its norm-wise relative error is within tolerance.
/// Elementwise errors are reported too but are dominated by truncation
/// error on entries whose gradient is near zero.
impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.tensors.iter().map(|t| t.norm_rel_error).fold(0.0, f64::max)
    }

    pub fn max_elementwise_error(&self) -> f64 {
        self.tensors.iter().map(|t| t.max_rel_error).fold(0.0, f64::max)
    }

    pub fn worst(&self) -> Option<&TensorCheck> {
        self.tensors.iter().max_by(|a, b| a.norm_rel_error.total_cmp(&b.norm_rel_error))
    }

    pub fn passed(&self, tol: f64) -> bool {
        self.max_rel_error() <= tol
    }

    pub fn describe(&self) -> String {
        let mut out = String::new();
        for t in &self.tensors {
            out.push_str(&format!(
                "{:28} n={:4} rel={:.3e} max_entry_rel={:.3e}\n",
                t.name, t.entries, t.norm_rel_error, t.max_rel_error
            ));
        }
        out
    }
}

fn tensor_check(name: String, analytic: &[f64], numeric: &[f64]) -> TensorCheck {
    let max_rel_error = analytic.iter().zip(numeric).map(|(&a, &n)| relative_error(a, n)).fold(0.0, f64::max);
    let diff: f64 = analytic.iter().zip(numeric).map(|(a, n)| (a - n).powi(2)).sum::<f64>().sqrt();
    let na: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
    let nn: f64 = numeric.iter().map(|n| n * n).sum::<f64>().sqrt();
    let norm_rel_error = diff / na.max(nn).max(DENOM_FLOOR);
    TensorCheck { name, entries: analytic.len(), max_rel_error, norm_rel_error }
}

/// Central differences; `eval(i, h)` returns the loss with entry `i` shifted by `h`.
pub fn numeric_gradient(len: usize, step: f64, mut eval: impl FnMut(usize, f64) -> f64) -> Vec<f64> {
    (0..len).map(|i| (eval(i, step) - eval(i, -step)) / (2.0 * step)).collect()
}

/// Compares `analytic` with central differences of `loss` for every
/// learnable entry of `params`.
pub fn check_params(
    params: &ModelParams,
    analytic: &ModelParams,
    step: f64,
    loss: impl Fn(&ModelParams) -> f64,
) -> GradCheckReport {
    let mut probe = params.clone();
    let names: Vec<(String, usize)> = params.tensors().iter().map(|(n, t)| (n.clone(), t.len())).collect();
    let mut report = GradCheckReport::default();
    for (ti, (name, len)) in names.into_iter().enumerate() {
        let numeric = numeric_gradient(len, step, |i, h| {
            let orig = {
                let mut ts = probe.tensors_mut();
                let v = ts[ti].1[i];
                ts[ti].1[i] = v + h;
                v
            };
            let l = loss(&probe);
            probe.tensors_mut()[ti].1[i] = orig;
            l
        });
        let a = analytic.tensors()[ti].1.to_vec();
        report.tensors.push(tensor_check(name, &a, &numeric));
    }
    report
}

/// Six nodes: a function with a parameter, a buffer declaration and a copy
/// call reading both, connected by every edge kind.
pub fn six_node_graph() -> CodeStructureGraph {
    let nodes = vec![
        RawNode::new(0, "FunctionDef", "void f ( char * s )"),
        RawNode::new(1, "Parameter", "char * s"),
        RawNode::new(2, "IdentifierDeclStatement", "char buf [ 8 ] ;").statement(),
        RawNode::new(3, "ExpressionStatement", "strcpy ( buf , s ) ;").statement(),
        RawNode::new(4, "Identifier", "buf"),
        RawNode::new(5, "Identifier", "s"),
    ];
    let edges = vec![
        RawEdge::new(0, 1, EdgeKind::Ast),
        RawEdge::new(0, 2, EdgeKind::Ast),
        RawEdge::new(0, 3, EdgeKind::Ast),
        RawEdge::new(3, 4, EdgeKind::Ast),
        RawEdge::new(3, 5, EdgeKind::Ast),
        RawEdge::new(0, 2, EdgeKind::Cfg),
        RawEdge::new(2, 3, EdgeKind::Cfg),
        RawEdge::new(1, 3, EdgeKind::Dfg).labeled("s"),
        RawEdge::new(2, 3, EdgeKind::Dfg).labeled("buf"),
        RawEdge::new(1, 2, EdgeKind::Ncs),
        RawEdge::new(4, 5, EdgeKind::Ncs),
    ];
    build_graph(nodes, edges, "f", Some(Label::Vulnerable)).expect("fixture is valid")
}

/// Hashed token features of width `d`.
pub fn fixture_features(g: &CodeStructureGraph, d: usize, salt: u64) -> NodeMatrix {
    initial_node_matrix(g, &HashingEmbedder { d, salt })
}

/// Small configuration used by the checks: width 4, two heads, default
/// kernel sizes.
pub fn fixture_config(activation: Activation) -> ModelConfig {
    ModelConfig {
        eagcn: EaGcnConfig { layers: 2, heads: 2, hidden: 4, ff_hidden: 6, activation, ..EaGcnConfig::default() },
        ksr: KsrConfig {
            in_channels: 4,
            out_channels: 4,
            fc_hidden: 5,
            activation,
            ..KsrConfig::default()
        },
    }
}

/// EA-GCN alone, loss = sum of all output entries. Also checks the
/// gradient w.r.t. the input features (reported as `input`). With ReLU the
/// input gradient can straddle a kink; prefer tanh when checking it.
pub fn check_eagcn(seed: u64, activation: Activation) -> Result<GradCheckReport, ModelError> {
    let cfg = fixture_config(activation);
    let model = Model::new(cfg.clone(), seed)?;
    let g = six_node_graph();
    let topo = cfg.eagcn.topology(&g)?;
    let h0 = fixture_features(&g, cfg.eagcn.hidden, seed);
    let (out, caches) = eagcn::forward_cached(&topo, &h0, &cfg.eagcn, &model.params.layers)?;
    let mut grads = model.params.zeros_like(&cfg);
    let d_h0 = eagcn::backward(
        &topo,
        &cfg.eagcn,
        &model.params.layers,
        &caches,
        &Array2::ones(out.raw_dim()),
        &mut grads.layers,
    );
    let loss = |p: &ModelParams| -> f64 {
        eagcn::forward_cached(&topo, &h0, &cfg.eagcn, &p.layers).map(|(o, _)| o.sum()).unwrap_or(f64::NAN)
    };
    let mut report = check_params(&model.params, &grads, DEFAULT_STEP, loss);
    report.tensors.retain(|t| t.name.starts_with("layer"));

    let mut x = h0.clone();
    let flat_len = x.len();
    let numeric = numeric_gradient(flat_len, DEFAULT_STEP, |i, h| {
        let slot = x.as_slice_mut().unwrap();
        let orig = slot[i];
        slot[i] = orig + h;
        let l = eagcn::forward_cached(&topo, &x, &cfg.eagcn, &model.params.layers).unwrap().0.sum();
        x.as_slice_mut().unwrap()[i] = orig;
        l
    });
    report.tensors.push(tensor_check("input".into(), d_h0.as_slice().unwrap(), &numeric));
    Ok(report)
}

/// Full model on a two-graph batch, mean cross-entropy in training mode,
/// covering every learnable tensor.
pub fn check_model(seed: u64, activation: Activation) -> Result<GradCheckReport, ModelError> {
    let cfg = fixture_config(activation);
    let model = Model::new(cfg.clone(), seed)?;
    let g = six_node_graph();
    let inputs = vec![
        GraphInput { topo: cfg.eagcn.topology(&g)?, features: fixture_features(&g, 4, seed) },
        GraphInput { topo: cfg.eagcn.topology(&g)?, features: fixture_features(&g, 4, seed ^ 0x5eed) },
    ];
    let batch = [(&inputs[0], Label::Vulnerable), (&inputs[1], Label::NonVulnerable)];
    let outcome = model.loss_and_grad(&batch, Mode::Train)?;
    let loss = |p: &ModelParams| -> f64 {
        let m = Model { config: cfg.clone(), params: p.clone() };
        m.loss_and_grad(&batch, Mode::Train).map(|o| o.loss).unwrap_or(f64::NAN)
    };
    Ok(check_params(&model.params, &outcome.grads, DEFAULT_STEP, loss))
}
