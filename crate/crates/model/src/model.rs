//! The full classifier: EA-GCN followed by the kernel-scaled readout.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use ample_core::embed::NodeMatrix;
use ample_core::{CodeStructureGraph, Label};

use crate::eagcn::{self, EaGcnConfig, EaGcnLayerParams, LayerCache};
use crate::ksr::{self, KsrBatchCache, KsrConfig, KsrParams, Mode};
use crate::topology::GraphTopology;
use crate::ModelError;

pub const CHECKPOINT_FORMAT: &str = "ample-model/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub eagcn: EaGcnConfig,
    pub ksr: KsrConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { eagcn: EaGcnConfig::default(), ksr: KsrConfig::default() }
    }
}

impl ModelConfig {
    /// Default hyperparameters at embedding width `d`; readout widths follow `d`.
    pub fn with_dim(d: usize) -> Self {
        let mut cfg = ModelConfig::default();
        cfg.eagcn.hidden = d;
        cfg.eagcn.ff_hidden = d;
        cfg.ksr.in_channels = d;
        cfg.ksr.out_channels = d;
        cfg.ksr.fc_hidden = d;
        cfg
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.eagcn.validate()?;
        self.ksr.validate()?;
        if self.ksr.in_channels != self.eagcn.hidden {
            return Err(ModelError::InvalidConfig(format!(
                "readout expects {} channels but the graph layers produce {}",
                self.ksr.in_channels, self.eagcn.hidden
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub layers: Vec<EaGcnLayerParams>,
    pub ksr: KsrParams,
}

impl ModelParams {
    pub fn random(cfg: &ModelConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = (0..cfg.eagcn.layers).map(|_| EaGcnLayerParams::random(&cfg.eagcn, &mut rng)).collect();
        ModelParams { layers, ksr: KsrParams::random(&cfg.ksr, &mut rng) }
    }

    pub fn zeros_like(&self, cfg: &ModelConfig) -> Self {
        ModelParams {
            layers: self.layers.iter().map(|_| EaGcnLayerParams::zeros(&cfg.eagcn)).collect(),
            ksr: self.ksr.zeros_like(),
        }
    }

    pub fn check_shapes(&self, cfg: &ModelConfig) -> Result<(), ModelError> {
        if self.layers.len() != cfg.eagcn.layers {
            return Err(ModelError::DimensionMismatch(format!(
                "{} layer parameter sets for {} layers",
                self.layers.len(),
                cfg.eagcn.layers
            )));
        }
        for l in &self.layers {
            l.check_shapes(&cfg.eagcn)?;
        }
        self.ksr.check_shapes(&cfg.ksr)
    }

    /// Learnable tensors in a fixed order, with qualified names.
    pub fn tensors(&self) -> Vec<(String, &[f64])> {
        let mut out = Vec::new();
        for (i, l) in self.layers.iter().enumerate() {
            out.extend(l.tensors().into_iter().map(|(n, t)| (format!("layer{i}.{n}"), t)));
        }
        out.extend(self.ksr.tensors().into_iter().map(|(n, t)| (format!("readout.{n}"), t)));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out = Vec::new();
        for (i, l) in self.layers.iter_mut().enumerate() {
            out.extend(l.tensors_mut().into_iter().map(|(n, t)| (format!("layer{i}.{n}"), t)));
        }
        out.extend(self.ksr.tensors_mut().into_iter().map(|(n, t)| (format!("readout.{n}"), t)));
        out
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }

    /// Elementwise `self += other` over learnable tensors.
    pub fn add_assign(&mut self, other: &ModelParams) {
        for ((_, a), (_, b)) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|(_, t)| t.iter().all(|v| v.is_finite()))
    }
}

/// A graph prepared for the model: relation topology plus initial features.
#[derive(Clone, Debug)]
pub struct GraphInput {
    pub topo: GraphTopology,
    pub features: NodeMatrix,
}

/// Result of a forward/backward pass over a batch.
pub struct BatchOutcome {
    /// Mean cross-entropy.
    pub loss: f64,
    pub grads: ModelParams,
    /// `(p_nonvulnerable, p_vulnerable)` per graph.
    pub probs: Vec<[f64; 2]>,
    readout: KsrBatchCache,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub config: ModelConfig,
    pub params: ModelParams,
}

impl Model {
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self, ModelError> {
        config.validate()?;
        let params = ModelParams::random(&config, seed);
        Ok(Model { config, params })
    }

    pub fn from_parts(config: ModelConfig, params: ModelParams) -> Result<Self, ModelError> {
        config.validate()?;
        params.check_shapes(&config)?;
        Ok(Model { config, params })
    }

    pub fn input(&self, g: &CodeStructureGraph, features: NodeMatrix) -> Result<GraphInput, ModelError> {
        if features.nrows() != g.num_nodes() || features.ncols() != self.config.eagcn.hidden {
            return Err(ModelError::DimensionMismatch(format!(
                "features are {}x{}, graph needs {}x{}",
                features.nrows(),
                features.ncols(),
                g.num_nodes(),
                self.config.eagcn.hidden
            )));
        }
        Ok(GraphInput { topo: self.config.eagcn.topology(g)?, features })
    }

    /// EA-GCN output for one graph.
    pub fn node_representations(&self, input: &GraphInput) -> Result<NodeMatrix, ModelError> {
        Ok(eagcn::forward_cached(&input.topo, &input.features, &self.config.eagcn, &self.params.layers)?.0)
    }

    /// Kernel-scaled output `K` (`|V| x C_out`) in evaluation mode.
    pub fn node_activations(&self, input: &GraphInput) -> Result<Array2<f64>, ModelError> {
        let h = self.node_representations(input)?;
        ksr::kernel_scaled_output(&h, &self.params.ksr, Mode::Eval)
    }

    /// `(p_nonvulnerable, p_vulnerable)` in evaluation mode.
    pub fn predict(&self, input: &GraphInput) -> Result<[f64; 2], ModelError> {
        let k = self.node_activations(input)?;
        Ok(ksr::classify(&k, &self.params.ksr, &self.config.ksr, k.nrows()))
    }

    pub fn predict_many(&self, inputs: &[GraphInput]) -> Result<Vec<[f64; 2]>, ModelError> {
        inputs.par_iter().map(|i| self.predict(i)).collect()
    }

    /// Mean cross-entropy over `batch` and its gradient. Running batch-norm
    /// statistics are not touched; see [`Model::update_running_stats`].
    pub fn loss_and_grad(&self, batch: &[(&GraphInput, Label)], mode: Mode) -> Result<BatchOutcome, ModelError> {
        if batch.is_empty() {
            return Err(ModelError::DimensionMismatch("empty batch".into()));
        }
        let cfg = &self.config;
        let forwards: Vec<(NodeMatrix, Vec<LayerCache>)> = batch
            .par_iter()
            .map(|(input, _)| eagcn::forward_cached(&input.topo, &input.features, &cfg.eagcn, &self.params.layers))
            .collect::<Result<_, _>>()?;
        let hs: Vec<&NodeMatrix> = forwards.iter().map(|(h, _)| h).collect();
        let lengths: Vec<usize> = hs.iter().map(|h| h.nrows()).collect();
        let (probs, _logits, readout) = ksr::forward_batch(&self.params.ksr, &cfg.ksr, &hs, &lengths, mode)?;

        let n = batch.len() as f64;
        let mut loss = 0.0;
        let mut d_logits = probs.clone();
        for (b, (_, label)) in batch.iter().enumerate() {
            let y = label.as_u8() as usize;
            loss -= probs[[b, y]].max(f64::MIN_POSITIVE).ln();
            d_logits[[b, y]] -= 1.0;
        }
        loss /= n;
        d_logits /= n;

        let mut grads = self.params.zeros_like(cfg);
        let d_hs = ksr::backward_batch(&self.params.ksr, &cfg.ksr, &readout, &d_logits, &mut grads.ksr);
        // Per-graph gradients are collected in batch order and summed
        // sequentially, so the result does not depend on the thread count.
        let per_graph: Vec<Vec<EaGcnLayerParams>> = batch
            .par_iter()
            .zip(forwards.par_iter())
            .zip(d_hs.par_iter())
            .map(|(((input, _), (_, caches)), d_h)| {
                let mut g: Vec<_> = self.params.layers.iter().map(|_| EaGcnLayerParams::zeros(&cfg.eagcn)).collect();
                eagcn::backward(&input.topo, &cfg.eagcn, &self.params.layers, caches, d_h, &mut g);
                g
            })
            .collect();
        for g in &per_graph {
            for (acc, layer) in grads.layers.iter_mut().zip(g) {
                for ((_, x), (_, y)) in acc.tensors_mut().into_iter().zip(layer.tensors()) {
                    for (u, v) in x.iter_mut().zip(y) {
                        *u += v;
                    }
                }
            }
        }
        let probs = probs.outer_iter().map(|r| [r[0], r[1]]).collect();
        Ok(BatchOutcome { loss, grads, probs, readout })
    }

    /// Folds the batch statistics of a training pass into the running ones.
    pub fn update_running_stats(&mut self, outcome: &BatchOutcome) {
        ksr::update_running_stats(&mut self.params.ksr, &outcome.readout);
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint { format: CHECKPOINT_FORMAT.to_string(), config: self.config.clone(), params: self.params.clone() }
    }
}

/// Serialized model. Floats round-trip exactly through JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub config: ModelConfig,
    pub params: ModelParams,
}

impl Checkpoint {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("checkpoint serializes")
    }

    pub fn from_json(text: &[u8]) -> Result<Self, ModelError> {
        let ck: Checkpoint = serde_json::from_slice(text).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(ModelError::Checkpoint(format!("unsupported format `{}`", ck.format)));
        }
        ck.params.check_shapes(&ck.config)?;
        Ok(ck)
    }

    pub fn into_model(self) -> Result<Model, ModelError> {
        Model::from_parts(self.config, self.params)
    }
}
