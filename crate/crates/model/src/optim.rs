//! Adam and rectified Adam.

use serde::{Deserialize, Serialize};

use crate::model::ModelParams;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    #[default]
    Adam,
    Radam,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub kind: OptimizerKind,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig { kind: OptimizerKind::Adam, lr: 1e-4, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

pub struct Optimizer {
    cfg: OptimizerConfig,
    t: u32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Optimizer {
    pub fn new(cfg: OptimizerConfig, params: &ModelParams) -> Self {
        let shapes: Vec<Vec<f64>> = params.tensors().iter().map(|(_, t)| vec![0.0; t.len()]).collect();
        Optimizer { cfg, t: 0, m: shapes.clone(), v: shapes }
    }

    pub fn config(&self) -> &OptimizerConfig {
        &self.cfg
    }

    pub fn steps(&self) -> u32 {
        self.t
    }

    pub fn step(&mut self, params: &mut ModelParams, grads: &ModelParams) {
        self.t += 1;
        let OptimizerConfig { kind, lr, beta1: b1, beta2: b2, eps } = self.cfg;
        let t = self.t as i32;
        let bc1 = 1.0 - b1.powi(t);
        let bc2 = 1.0 - b2.powi(t);
        // rectification term; None means the variance estimate is not yet usable
        let rect = match kind {
            OptimizerKind::Adam => Some(1.0),
            OptimizerKind::Radam => {
                let rho_inf = 2.0 / (1.0 - b2) - 1.0;
                let rho_t = rho_inf - 2.0 * t as f64 * b2.powi(t) / bc2;
                (rho_t > 5.0).then(|| {
                    (((rho_t - 4.0) * (rho_t - 2.0) * rho_inf) / ((rho_inf - 4.0) * (rho_inf - 2.0) * rho_t)).sqrt()
                })
            }
        };
        for (((_, p), (_, g)), (m, v)) in
            params.tensors_mut().into_iter().zip(grads.tensors()).zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let update = match rect {
                    Some(r) => r * m_hat / ((v[i] / bc2).sqrt() + eps),
                    None => m_hat,
                };
                p[i] -= lr * update;
            }
        }
    }
}
