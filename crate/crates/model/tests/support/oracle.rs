//! Scalar-loop reference implementations used as test oracles.
//! Deliberately naive: nested loops over plain vectors, read straight from
//! the graph's edge list.
#![allow(dead_code)]

use ample_core::CodeStructureGraph;
use ample_model::eagcn::{EaGcnConfig, EaGcnLayerParams};
use ample_model::ksr::{KsrConfig, KsrParams, Pooling};
use ample_model::nn::Activation;

pub type Mat = Vec<Vec<f64>>;

pub fn to_mat(a: &ndarray::Array2<f64>) -> Mat {
    a.outer_iter().map(|r| r.to_vec()).collect()
}

fn act(a: Activation, x: f64) -> f64 {
    match a {
        Activation::Relu => {
            if x > 0.0 {
                x
            } else {
                0.0
            }
        }
        Activation::Tanh => x.tanh(),
        Activation::Identity => x,
    }
}

fn layer(g: &CodeStructureGraph, h: &Mat, cfg: &EaGcnConfig, p: &EaGcnLayerParams) -> Mat {
    let n = h.len();
    let d = cfg.hidden;
    // propagation
    let mut prop = vec![vec![0.0; d]; n];
    for i in 0..n {
        let mut mixed = vec![0.0; d];
        for (r, kind) in cfg.relations.iter().enumerate() {
            let mut sum = vec![0.0; d];
            let mut count = 0usize;
            for e in g.edges() {
                let (src, dst) = if cfg.reverse_edges { (e.dst.0, e.src.0) } else { (e.src.0, e.dst.0) };
                if &e.kind == kind && dst == i {
                    count += 1;
                    for c in 0..d {
                        sum[c] += h[src][c];
                    }
                }
            }
            if count > 0 {
                for c in 0..d {
                    mixed[c] += p.relation_weights[r] * sum[c] / count as f64;
                }
            }
        }
        for c in 0..d {
            let mut z = 0.0;
            for k in 0..d {
                z += mixed[k] * p.transform[[k, c]] + h[i][k] * p.self_loop[[k, c]];
            }
            prop[i][c] = act(cfg.activation, z);
        }
    }
    // attention
    let hd = d / cfg.heads;
    let mut concat = vec![vec![0.0; d]; n];
    for j in 0..n {
        let srcs: Vec<usize> = g
            .edges()
            .iter()
            .filter_map(|e| {
                let (src, dst) = if cfg.reverse_edges { (e.dst.0, e.src.0) } else { (e.src.0, e.dst.0) };
                (dst == j).then_some(src)
            })
            .collect();
        if srcs.is_empty() {
            continue;
        }
        for k in 0..cfg.heads {
            let scores: Vec<f64> = srcs
                .iter()
                .map(|&i| (0..hd).map(|t| prop[i][k * hd + t] * prop[j][k * hd + t]).sum::<f64>() / (hd as f64).sqrt())
                .collect();
            let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let z: f64 = scores.iter().map(|s| (s - m).exp()).sum();
            for (idx, &i) in srcs.iter().enumerate() {
                let w = (scores[idx] - m).exp() / z;
                for t in 0..hd {
                    concat[j][k * hd + t] += w * prop[i][k * hd + t];
                }
            }
        }
    }
    let f = cfg.ff_hidden;
    let mut out = vec![vec![0.0; d]; n];
    for i in 0..n {
        let mut a = vec![0.0; d];
        for c in 0..d {
            a[c] = h[i][c];
            for k in 0..d {
                a[c] += concat[i][k] * p.head_proj[[k, c]];
            }
        }
        let mut hidden = vec![0.0; f];
        for u in 0..f {
            let mut z = p.ff_in_bias[u];
            for k in 0..d {
                z += a[k] * p.ff_in[[k, u]];
            }
            hidden[u] = act(cfg.activation, z);
        }
        for c in 0..d {
            let mut z = p.ff_out_bias[c] + a[c];
            for u in 0..f {
                z += hidden[u] * p.ff_out[[u, c]];
            }
            out[i][c] = z;
        }
    }
    out
}

pub fn eagcn(g: &CodeStructureGraph, h0: &Mat, cfg: &EaGcnConfig, params: &[EaGcnLayerParams]) -> Mat {
    params.iter().fold(h0.clone(), |h, p| layer(g, &h, cfg, p))
}

/// `K` in evaluation mode.
pub fn kernel_scaled(x: &Mat, p: &KsrParams) -> Mat {
    let n = x.len();
    let mut k = vec![vec![0.0; p.large.dim().0]; n];
    for (w, bn) in [(&p.large, &p.bn_large), (&p.small, &p.bn_small)] {
        let (c_out, c_in, width) = w.dim();
        let r = (width / 2) as isize;
        for pos in 0..n {
            for c in 0..c_out {
                let mut z = 0.0;
                for t in 0..width {
                    let q = pos as isize + t as isize - r;
                    if q < 0 || q >= n as isize {
                        continue;
                    }
                    for ci in 0..c_in {
                        z += w[[c, ci, t]] * x[q as usize][ci];
                    }
                }
                let norm = (z - bn.running_mean[c]) / (bn.running_var[c] + bn.eps).sqrt();
                k[pos][c] += bn.gamma[c] * norm + bn.beta[c];
            }
        }
    }
    k
}

pub fn classify(k: &Mat, p: &KsrParams, cfg: &KsrConfig) -> [f64; 2] {
    let c_out = k[0].len();
    let mut pooled = vec![0.0; c_out];
    for c in 0..c_out {
        pooled[c] = match cfg.pooling {
            Pooling::Max => k.iter().map(|r| r[c]).fold(f64::NEG_INFINITY, f64::max),
            Pooling::Mean => k.iter().map(|r| r[c]).sum::<f64>() / k.len() as f64,
        };
    }
    let h = cfg.fc_hidden;
    let mut hidden = vec![0.0; h];
    for u in 0..h {
        let mut z = p.fc1_bias[u];
        for c in 0..c_out {
            z += pooled[c] * p.fc1[[c, u]];
        }
        hidden[u] = act(cfg.activation, z);
    }
    let mut logits = [p.fc2_bias[0], p.fc2_bias[1]];
    for (o, l) in logits.iter_mut().enumerate() {
        for u in 0..h {
            *l += hidden[u] * p.fc2[[u, o]];
        }
    }
    let e0 = logits[0].exp();
    let e1 = logits[1].exp();
    [e0 / (e0 + e1), e1 / (e0 + e1)]
}
