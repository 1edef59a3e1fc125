//! Kernel-scaled readout.
//!
//! The node axis of the EA-GCN output is treated as a sequence of `C_in`
//! channel vectors. A large-kernel and a small-kernel convolution (stride 1,
//! zero "same" padding) each map it to `C_out` channels, each branch is batch
//! normalized per channel, and the branches are summed:
//!
//! ```text
//! K = BN_large(H * W_large) + BN_small(H * W_small)
//! ```
//!
//! `K` is pooled over the graph's true node positions and fed to
//! `softmax(act(pooled F1 + b1) F2 + b2)` for the two classes
//! (non-vulnerable, vulnerable).
//!
//! Batch statistics in training mode run over the true positions of every
//! graph in the batch; padding rows never enter them.

use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array1, Array2, Array3, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use ample_core::embed::NodeMatrix;

use crate::nn::{column_sums, xavier, xavier3, Activation};
use crate::ModelError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pooling {
    #[default]
    Max,
    Mean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KsrConfig {
    pub large_kernel: usize,
    pub small_kernel: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub fc_hidden: usize,
    pub pooling: Pooling,
    pub activation: Activation,
    pub bn_momentum: f64,
    pub bn_eps: f64,
}

impl Default for KsrConfig {
    fn default() -> Self {
        KsrConfig {
            large_kernel: 11,
            small_kernel: 3,
            in_channels: 100,
            out_channels: 100,
            fc_hidden: 100,
            pooling: Pooling::Max,
            activation: Activation::Relu,
            bn_momentum: 0.1,
            bn_eps: 1e-5,
        }
    }
}

impl KsrConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        let (l, s) = (self.large_kernel, self.small_kernel);
        if l % 2 == 0 || s % 2 == 0 {
            return Err(ModelError::InvalidConfig(format!("kernel sizes must be odd, got {l} and {s}")));
        }
        // equal sizes are allowed so the two-small-kernel ablation can run
        if s > l {
            return Err(ModelError::InvalidConfig(format!(
                "small kernel ({s}) may not exceed the large kernel ({l})"
            )));
        }
        if self.in_channels == 0 || self.out_channels == 0 || self.fc_hidden == 0 {
            return Err(ModelError::InvalidConfig("channel counts must be positive".into()));
        }
        Ok(())
    }
}

/// Per-channel batch normalization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BatchNorm {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
    pub eps: f64,
    pub momentum: f64,
}

pub struct BnCache {
    xhat: Array2<f64>,
    inv_std: Array1<f64>,
    mode: Mode,
    batch_mean: Array1<f64>,
    batch_var_unbiased: Array1<f64>,
}

impl BatchNorm {
    pub fn new(channels: usize, eps: f64, momentum: f64) -> Self {
        BatchNorm {
            gamma: Array1::ones(channels),
            beta: Array1::zeros(channels),
            running_mean: Array1::zeros(channels),
            running_var: Array1::ones(channels),
            eps,
            momentum,
        }
    }

    /// Rows are positions, columns channels.
    pub fn forward(&self, x: &Array2<f64>, mode: Mode) -> (Array2<f64>, BnCache) {
        let n = x.nrows();
        let (mean, var, unbiased) = match mode {
            Mode::Train => {
                let mean = x.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(x.ncols()));
                let centered = x - &mean;
                let sq = (&centered * &centered).sum_axis(Axis(0));
                let var = &sq / n.max(1) as f64;
                let unbiased = if n > 1 { &sq / (n - 1) as f64 } else { var.clone() };
                (mean, var, unbiased)
            }
            Mode::Eval => (self.running_mean.clone(), self.running_var.clone(), self.running_var.clone()),
        };
        let inv_std = var.mapv(|v| 1.0 / (v + self.eps).sqrt());
        let xhat = (x - &mean) * &inv_std;
        let out = &xhat * &self.gamma + &self.beta;
        (out, BnCache { xhat, inv_std, mode, batch_mean: mean, batch_var_unbiased: unbiased })
    }

    /// Moves running statistics toward the statistics of a training batch.
    pub fn update_running(&mut self, cache: &BnCache) {
        if cache.mode != Mode::Train {
            return;
        }
        let m = self.momentum;
        self.running_mean = &self.running_mean * (1.0 - m) + &cache.batch_mean * m;
        self.running_var = &self.running_var * (1.0 - m) + &cache.batch_var_unbiased * m;
    }

    /// Returns the input gradient; accumulates gamma/beta gradients into `grad`.
    pub fn backward(&self, cache: &BnCache, dy: &Array2<f64>, grad: &mut BatchNorm) -> Array2<f64> {
        grad.gamma += &(dy * &cache.xhat).sum_axis(Axis(0));
        grad.beta += &dy.sum_axis(Axis(0));
        let dxhat = dy * &self.gamma;
        match cache.mode {
            Mode::Eval => dxhat * &cache.inv_std,
            Mode::Train => {
                let n = dy.nrows() as f64;
                let sum_dxhat = dxhat.sum_axis(Axis(0));
                let sum_dxhat_xhat = (&dxhat * &cache.xhat).sum_axis(Axis(0));
                let mut dx = dxhat * n - &sum_dxhat - &(&cache.xhat * &sum_dxhat_xhat);
                dx *= &(&cache.inv_std / n);
                dx
            }
        }
    }

    fn zeroed(&self) -> Self {
        let c = self.gamma.len();
        BatchNorm {
            gamma: Array1::zeros(c),
            beta: Array1::zeros(c),
            running_mean: Array1::zeros(c),
            running_var: Array1::zeros(c),
            eps: self.eps,
            momentum: self.momentum,
        }
    }
}

/// Batch normalization of a single channel sequence. Training mode also
/// updates the running statistics in `bn`.
pub fn batch_norm_channel(x: &[f64], bn: &mut BatchNorm, mode: Mode) -> Vec<f64> {
    assert_eq!(bn.gamma.len(), 1, "single-channel batch norm expected");
    let col = Array2::from_shape_vec((x.len(), 1), x.to_vec()).unwrap();
    let (out, cache) = bn.forward(&col, mode);
    bn.update_running(&cache);
    out.into_raw_vec_and_offset().0
}

/// Stride-1 convolution along rows with zero "same" padding.
/// `x` is `n x C_in`, `w` is `C_out x C_in x k` (odd `k`); output `n x C_out`.
pub fn conv1d_same(x: &Array2<f64>, w: &Array3<f64>) -> Array2<f64> {
    let n = x.nrows();
    let (c_out, _, k) = w.dim();
    let r = (k / 2) as isize;
    let mut y = Array2::zeros((n, c_out));
    for t in 0..k {
        let delta = t as isize - r;
        let (lo, hi) = shifted_range(n, delta);
        if lo >= hi {
            continue;
        }
        let src = x.slice(s![(lo as isize + delta) as usize..(hi as isize + delta) as usize, ..]);
        let tap = w.slice(s![.., .., t]);
        let mut dst = y.slice_mut(s![lo..hi, ..]);
        general_mat_mul(1.0, &src, &tap.t(), 1.0, &mut dst);
    }
    y
}

/// Output rows `p` for which `p + delta` is a valid input row.
fn shifted_range(n: usize, delta: isize) -> (usize, usize) {
    let lo = (-delta).max(0) as usize;
    let hi = (n as isize - delta.max(0)).max(0) as usize;
    (lo.min(n), hi)
}

/// Gradients of [`conv1d_same`]: accumulates into `dw`, returns `dx`.
pub fn conv1d_same_backward(x: &Array2<f64>, w: &Array3<f64>, dy: &Array2<f64>, dw: &mut Array3<f64>) -> Array2<f64> {
    let n = x.nrows();
    let k = w.dim().2;
    let r = (k / 2) as isize;
    let mut dx = Array2::zeros(x.raw_dim());
    for t in 0..k {
        let delta = t as isize - r;
        let (lo, hi) = shifted_range(n, delta);
        if lo >= hi {
            continue;
        }
        let rows_in = (lo as isize + delta) as usize..(hi as isize + delta) as usize;
        let src = x.slice(s![rows_in.clone(), ..]);
        let d_out = dy.slice(s![lo..hi, ..]);
        // dW_t (C_out x C_in) += dY^T X_shift
        let mut tap_grad = dw.slice_mut(s![.., .., t]);
        general_mat_mul(1.0, &d_out.t(), &src, 1.0, &mut tap_grad);
        let tap = w.slice(s![.., .., t]);
        let mut d_src = dx.slice_mut(s![rows_in, ..]);
        general_mat_mul(1.0, &d_out, &tap, 1.0, &mut d_src);
    }
    dx
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsrParams {
    /// `C_out x C_in x large_kernel`.
    pub large: Array3<f64>,
    /// `C_out x C_in x small_kernel`.
    pub small: Array3<f64>,
    pub bn_large: BatchNorm,
    pub bn_small: BatchNorm,
    pub fc1: Array2<f64>,
    pub fc1_bias: Array1<f64>,
    pub fc2: Array2<f64>,
    pub fc2_bias: Array1<f64>,
}

impl KsrParams {
    pub fn random<R: Rng>(cfg: &KsrConfig, rng: &mut R) -> Self {
        let (ci, co) = (cfg.in_channels, cfg.out_channels);
        KsrParams {
            large: xavier3(rng, co, ci, cfg.large_kernel),
            small: xavier3(rng, co, ci, cfg.small_kernel),
            bn_large: BatchNorm::new(co, cfg.bn_eps, cfg.bn_momentum),
            bn_small: BatchNorm::new(co, cfg.bn_eps, cfg.bn_momentum),
            fc1: xavier(rng, co, cfg.fc_hidden),
            fc1_bias: Array1::zeros(cfg.fc_hidden),
            fc2: xavier(rng, cfg.fc_hidden, 2),
            fc2_bias: Array1::zeros(2),
        }
    }

    /// Same shapes, every value zero (gradient accumulator).
    pub fn zeros_like(&self) -> Self {
        KsrParams {
            large: Array3::zeros(self.large.raw_dim()),
            small: Array3::zeros(self.small.raw_dim()),
            bn_large: self.bn_large.zeroed(),
            bn_small: self.bn_small.zeroed(),
            fc1: Array2::zeros(self.fc1.raw_dim()),
            fc1_bias: Array1::zeros(self.fc1_bias.raw_dim()),
            fc2: Array2::zeros(self.fc2.raw_dim()),
            fc2_bias: Array1::zeros(self.fc2_bias.raw_dim()),
        }
    }

    pub fn check_shapes(&self, cfg: &KsrConfig) -> Result<(), ModelError> {
        let (ci, co, h) = (cfg.in_channels, cfg.out_channels, cfg.fc_hidden);
        let ok = self.large.dim() == (co, ci, cfg.large_kernel)
            && self.small.dim() == (co, ci, cfg.small_kernel)
            && self.bn_large.gamma.len() == co
            && self.bn_small.gamma.len() == co
            && self.fc1.dim() == (co, h)
            && self.fc1_bias.len() == h
            && self.fc2.dim() == (h, 2)
            && self.fc2_bias.len() == 2;
        if ok {
            Ok(())
        } else {
            Err(ModelError::DimensionMismatch("readout parameters do not match the configuration".into()))
        }
    }

    /// Learnable tensors only; running statistics are excluded.
    pub fn tensors_mut(&mut self) -> Vec<(&'static str, &mut [f64])> {
        vec![
            ("conv_large", self.large.as_slice_mut().unwrap()),
            ("conv_small", self.small.as_slice_mut().unwrap()),
            ("bn_large.gamma", self.bn_large.gamma.as_slice_mut().unwrap()),
            ("bn_large.beta", self.bn_large.beta.as_slice_mut().unwrap()),
            ("bn_small.gamma", self.bn_small.gamma.as_slice_mut().unwrap()),
            ("bn_small.beta", self.bn_small.beta.as_slice_mut().unwrap()),
            ("fc1", self.fc1.as_slice_mut().unwrap()),
            ("fc1_bias", self.fc1_bias.as_slice_mut().unwrap()),
            ("fc2", self.fc2.as_slice_mut().unwrap()),
            ("fc2_bias", self.fc2_bias.as_slice_mut().unwrap()),
        ]
    }

    pub fn tensors(&self) -> Vec<(&'static str, &[f64])> {
        vec![
            ("conv_large", self.large.as_slice().unwrap()),
            ("conv_small", self.small.as_slice().unwrap()),
            ("bn_large.gamma", self.bn_large.gamma.as_slice().unwrap()),
            ("bn_large.beta", self.bn_large.beta.as_slice().unwrap()),
            ("bn_small.gamma", self.bn_small.gamma.as_slice().unwrap()),
            ("bn_small.beta", self.bn_small.beta.as_slice().unwrap()),
            ("fc1", self.fc1.as_slice().unwrap()),
            ("fc1_bias", self.fc1_bias.as_slice().unwrap()),
            ("fc2", self.fc2.as_slice().unwrap()),
            ("fc2_bias", self.fc2_bias.as_slice().unwrap()),
        ]
    }
}

/// Dense padded batch `batch x max_nodes x d` with true lengths.
#[derive(Clone, Debug, PartialEq)]
pub struct PaddedBatch {
    pub tensor: Array3<f64>,
    pub lengths: Vec<usize>,
}

impl PaddedBatch {
    /// Zero-pads every matrix to `max_nodes` rows. Graphs longer than
    /// `max_nodes` are truncated; their recorded length is clipped.
    pub fn new(graphs: &[&NodeMatrix], max_nodes: usize) -> Result<Self, ModelError> {
        let d = graphs.first().map_or(0, |g| g.ncols());
        let mut tensor = Array3::zeros((graphs.len(), max_nodes, d));
        let mut lengths = Vec::with_capacity(graphs.len());
        for (b, g) in graphs.iter().enumerate() {
            if g.ncols() != d {
                return Err(ModelError::DimensionMismatch("graphs in a batch must share the feature width".into()));
            }
            let len = g.nrows().min(max_nodes);
            tensor.slice_mut(s![b, ..len, ..]).assign(&g.slice(s![..len, ..]));
            lengths.push(len);
        }
        Ok(PaddedBatch { tensor, lengths })
    }

    pub fn graph(&self, b: usize) -> Array2<f64> {
        self.tensor.slice(s![b, .., ..]).to_owned()
    }
}

/// `K` for every row of `x` (`n x C_out`). In training mode the batch
/// statistics are taken over all rows of `x`.
pub fn kernel_scaled_output(x: &NodeMatrix, params: &KsrParams, mode: Mode) -> Result<Array2<f64>, ModelError> {
    if x.nrows() == 0 {
        return Err(ModelError::DimensionMismatch("node axis is empty".into()));
    }
    if x.ncols() != params.large.dim().1 || x.ncols() != params.small.dim().1 {
        return Err(ModelError::DimensionMismatch(format!(
            "input has {} channels, kernels expect {}",
            x.ncols(),
            params.large.dim().1
        )));
    }
    let (l, _) = params.bn_large.forward(&conv1d_same(x, &params.large), mode);
    let (s, _) = params.bn_small.forward(&conv1d_same(x, &params.small), mode);
    Ok(l + s)
}

fn pool(k: &Array2<f64>, pooling: Pooling) -> (Array1<f64>, Vec<usize>) {
    match pooling {
        Pooling::Max => {
            let mut best = Array1::from_elem(k.ncols(), f64::NEG_INFINITY);
            let mut arg = vec![0; k.ncols()];
            for (p, row) in k.outer_iter().enumerate() {
                for (c, &v) in row.iter().enumerate() {
                    if v > best[c] {
                        best[c] = v;
                        arg[c] = p;
                    }
                }
            }
            (best, arg)
        }
        Pooling::Mean => (k.mean_axis(Axis(0)).unwrap(), Vec::new()),
    }
}

fn head(pooled: &Array2<f64>, params: &KsrParams, act: Activation) -> (Array2<f64>, Array2<f64>, Array2<f64>) {
    let z1 = pooled.dot(&params.fc1) + &params.fc1_bias;
    let a1 = act.map(&z1);
    let logits = a1.dot(&params.fc2) + &params.fc2_bias;
    (z1, a1, logits)
}

fn softmax_pair(logits: ndarray::ArrayView1<f64>) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let e0 = (logits[0] - m).exp();
    let e1 = (logits[1] - m).exp();
    [e0 / (e0 + e1), e1 / (e0 + e1)]
}

/// Pools the first `length` rows of `k` and returns
/// `(p_nonvulnerable, p_vulnerable)`.
pub fn classify(k: &Array2<f64>, params: &KsrParams, cfg: &KsrConfig, length: usize) -> [f64; 2] {
    let length = length.min(k.nrows());
    let (pooled, _) = pool(&k.slice(s![..length, ..]).to_owned(), cfg.pooling);
    let pooled = pooled.insert_axis(Axis(0));
    let (_, _, logits) = head(&pooled, params, cfg.activation);
    softmax_pair(logits.row(0))
}

pub struct KsrBatchCache {
    inputs: Vec<NodeMatrix>,
    lengths: Vec<usize>,
    offsets: Vec<usize>,
    bn_large: BnCache,
    bn_small: BnCache,
    argmax: Vec<Vec<usize>>,
    pooled: Array2<f64>,
    z1: Array2<f64>,
    a1: Array2<f64>,
    /// Per-graph `K` rows (true positions only), stacked.
    pub k_out: Array2<f64>,
}

impl KsrBatchCache {
    /// `K` rows of graph `b`.
    pub fn graph_k(&self, b: usize) -> Array2<f64> {
        self.k_out.slice(s![self.offsets[b]..self.offsets[b + 1], ..]).to_owned()
    }
}

/// Readout for a batch of graphs. Row `b` of the result is
/// `(p_nonvulnerable, p_vulnerable)` of graph `b`; the logits are returned
/// alongside for the loss.
pub fn forward_batch(
    params: &KsrParams,
    cfg: &KsrConfig,
    xs: &[&NodeMatrix],
    lengths: &[usize],
    mode: Mode,
) -> Result<(Array2<f64>, Array2<f64>, KsrBatchCache), ModelError> {
    cfg.validate()?;
    params.check_shapes(cfg)?;
    assert_eq!(xs.len(), lengths.len());
    let mut offsets = vec![0];
    let mut large_rows = Vec::with_capacity(xs.len());
    let mut small_rows = Vec::with_capacity(xs.len());
    for (x, &len) in xs.iter().zip(lengths) {
        if x.ncols() != cfg.in_channels {
            return Err(ModelError::DimensionMismatch(format!(
                "input has {} channels, expected {}",
                x.ncols(),
                cfg.in_channels
            )));
        }
        if len == 0 || len > x.nrows() {
            return Err(ModelError::DimensionMismatch(format!("invalid true length {len} for {} rows", x.nrows())));
        }
        large_rows.push(conv1d_same(x, &params.large).slice(s![..len, ..]).to_owned());
        small_rows.push(conv1d_same(x, &params.small).slice(s![..len, ..]).to_owned());
        offsets.push(offsets.last().unwrap() + len);
    }
    let stack = |rows: &[Array2<f64>]| {
        let views: Vec<_> = rows.iter().map(|r| r.view()).collect();
        ndarray::concatenate(Axis(0), &views).expect("same channel count")
    };
    let (l, bn_large) = params.bn_large.forward(&stack(&large_rows), mode);
    let (s_, bn_small) = params.bn_small.forward(&stack(&small_rows), mode);
    let k_out = l + s_;

    let b = xs.len();
    let mut pooled = Array2::zeros((b, cfg.out_channels));
    let mut argmax = Vec::with_capacity(b);
    for g in 0..b {
        let rows = k_out.slice(s![offsets[g]..offsets[g + 1], ..]).to_owned();
        let (p, arg) = pool(&rows, cfg.pooling);
        pooled.row_mut(g).assign(&p);
        argmax.push(arg);
    }
    let (z1, a1, logits) = head(&pooled, params, cfg.activation);
    let mut probs = Array2::zeros((b, 2));
    for g in 0..b {
        let p = softmax_pair(logits.row(g));
        probs[[g, 0]] = p[0];
        probs[[g, 1]] = p[1];
    }
    let cache = KsrBatchCache {
        inputs: xs.iter().map(|x| (*x).clone()).collect(),
        lengths: lengths.to_vec(),
        offsets,
        bn_large,
        bn_small,
        argmax,
        pooled,
        z1,
        a1,
        k_out,
    };
    Ok((probs, logits, cache))
}

/// Applies the running-statistics update of a training batch.
pub fn update_running_stats(params: &mut KsrParams, cache: &KsrBatchCache) {
    params.bn_large.update_running(&cache.bn_large);
    params.bn_small.update_running(&cache.bn_small);
}

/// Backpropagates `d_logits` (`batch x 2`); accumulates into `grads` and
/// returns the gradient w.r.t. every input matrix.
pub fn backward_batch(
    params: &KsrParams,
    cfg: &KsrConfig,
    cache: &KsrBatchCache,
    d_logits: &Array2<f64>,
    grads: &mut KsrParams,
) -> Vec<NodeMatrix> {
    grads.fc2 += &cache.a1.t().dot(d_logits);
    grads.fc2_bias += &column_sums(d_logits);
    let d_z1 = cfg.activation.backprop(&cache.z1, &d_logits.dot(&params.fc2.t()));
    grads.fc1 += &cache.pooled.t().dot(&d_z1);
    grads.fc1_bias += &column_sums(&d_z1);
    let d_pooled = d_z1.dot(&params.fc1.t());

    let mut d_k = Array2::zeros(cache.k_out.raw_dim());
    for g in 0..cache.lengths.len() {
        let base = cache.offsets[g];
        let len = cache.lengths[g];
        match cfg.pooling {
            Pooling::Max => {
                for (c, &p) in cache.argmax[g].iter().enumerate() {
                    d_k[[base + p, c]] += d_pooled[[g, c]];
                }
            }
            Pooling::Mean => {
                let row = d_pooled.row(g).mapv(|v| v / len as f64);
                for p in 0..len {
                    d_k.row_mut(base + p).assign(&row);
                }
            }
        }
    }
    let d_large = params.bn_large.backward(&cache.bn_large, &d_k, &mut grads.bn_large);
    let d_small = params.bn_small.backward(&cache.bn_small, &d_k, &mut grads.bn_small);

    let mut d_inputs = Vec::with_capacity(cache.inputs.len());
    for (g, x) in cache.inputs.iter().enumerate() {
        let rows = cache.offsets[g]..cache.offsets[g + 1];
        let len = cache.lengths[g];
        let mut dy_l = Array2::zeros((x.nrows(), cfg.out_channels));
        let mut dy_s = Array2::zeros((x.nrows(), cfg.out_channels));
        dy_l.slice_mut(s![..len, ..]).assign(&d_large.slice(s![rows.clone(), ..]));
        dy_s.slice_mut(s![..len, ..]).assign(&d_small.slice(s![rows, ..]));
        let dx = conv1d_same_backward(x, &params.large, &dy_l, &mut grads.large)
            + conv1d_same_backward(x, &params.small, &dy_s, &mut grads.small);
        d_inputs.push(dx);
    }
    d_inputs
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn batch_norm_identity_and_train_cases() {
        let mut bn = BatchNorm::new(1, 0.0, 0.1);
        assert_eq!(batch_norm_channel(&[1.0, -2.0, 5.0], &mut bn, Mode::Eval), vec![1.0, -2.0, 5.0]);
        let out = batch_norm_channel(&[1.0, 2.0, 3.0], &mut bn, Mode::Train);
        let r = 1.5f64.sqrt();
        assert!((out[0] + r).abs() < 1e-12 && out[1].abs() < 1e-12 && (out[2] - r).abs() < 1e-12);
        // running stats moved toward mean 2, unbiased variance 1
        assert!((bn.running_mean[0] - 0.2).abs() < 1e-12);
        assert!((bn.running_var[0] - 1.0).abs() < 1e-12);

        let mut bn = BatchNorm::new(1, 1e-5, 0.1);
        assert_eq!(batch_norm_channel(&[4.0, 4.0, 4.0], &mut bn, Mode::Train), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn conv_same_padding_shape_and_identity() {
        let x = Array2::from_shape_fn((5, 2), |(i, j)| (i * 2 + j) as f64);
        for k in [1, 3, 5, 7, 11] {
            let w = Array3::zeros((3, 2, k));
            assert_eq!(conv1d_same(&x, &w).dim(), (5, 3));
        }
        // centre tap identity reproduces the input
        let mut w = Array3::zeros((2, 2, 3));
        w[[0, 0, 1]] = 1.0;
        w[[1, 1, 1]] = 1.0;
        assert_eq!(conv1d_same(&x, &w), x);
        // left tap reads the previous row
        let mut w = Array3::zeros((1, 2, 3));
        w[[0, 0, 0]] = 1.0;
        assert_eq!(conv1d_same(&x, &w).column(0).to_vec(), vec![0.0, 0.0, 2.0, 4.0, 6.0]);
    }

    fn small_cfg(large: usize, small: usize) -> KsrConfig {
        KsrConfig {
            large_kernel: large,
            small_kernel: small,
            in_channels: 2,
            out_channels: 3,
            fc_hidden: 4,
            ..KsrConfig::default()
        }
    }

    #[test]
    fn zero_input_gives_zero_output() {
        let cfg = small_cfg(3, 1);
        let p = KsrParams::random(&cfg, &mut ChaCha8Rng::seed_from_u64(1));
        let k = kernel_scaled_output(&Array2::zeros((4, 2)), &p, Mode::Eval).unwrap();
        assert!(k.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn identical_branches_double() {
        let cfg = small_cfg(3, 3);
        let mut p = KsrParams::random(&cfg, &mut ChaCha8Rng::seed_from_u64(2));
        p.small = p.large.clone();
        let x = Array2::from_shape_fn((5, 2), |(i, j)| ((i + 3 * j) as f64).sin());
        let k = kernel_scaled_output(&x, &p, Mode::Eval).unwrap();
        let (single, _) = p.bn_large.forward(&conv1d_same(&x, &p.large), Mode::Eval);
        assert_eq!(k, &single * 2.0);
    }

    #[test]
    fn classify_probabilities() {
        let cfg = small_cfg(3, 1);
        let mut p = KsrParams::random(&cfg, &mut ChaCha8Rng::seed_from_u64(3));
        let k = array![[0.3, -1.0, 2.0], [1.5, 0.2, -0.4]];
        let pr = classify(&k, &p, &cfg, 2);
        assert!((pr[0] + pr[1] - 1.0).abs() < 1e-12);
        p.fc2.fill(0.0);
        p.fc2_bias.fill(0.0);
        assert_eq!(classify(&k, &p, &cfg, 2), [0.5, 0.5]);
    }

    #[test]
    fn config_validation() {
        assert!(small_cfg(4, 3).validate().is_err());
        assert!(small_cfg(3, 5).validate().is_err());
        assert!(small_cfg(11, 3).validate().is_ok());
        assert!(KsrConfig::default().validate().is_ok());
    }
}
