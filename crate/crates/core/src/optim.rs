//! First-order optimizers over flat `f64` parameter slices.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with bias correction. Holds moment estimates for one parameter
/// tensor of fixed length.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    cfg: AdamConfig,
    t: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(len: usize, lr: f64, cfg: AdamConfig) -> Self {
        Self {
            lr,
            cfg,
            t: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        debug_assert_eq!(params.len(), self.m.len());
        debug_assert_eq!(grads.len(), self.m.len());
        self.t += 1;
        let AdamConfig { beta1, beta2, eps } = self.cfg;
        let bc1 = 1.0 - beta1.powi(self.t);
        let bc2 = 1.0 - beta2.powi(self.t);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam,
    /// Plain fixed-step gradient descent.
    Gd,
}

/// Either Adam or plain gradient descent behind one `step` call.
#[derive(Debug, Clone)]
pub enum Optimizer {
    Adam(Adam),
    Gd { lr: f64 },
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, len: usize, lr: f64, cfg: AdamConfig) -> Self {
        match kind {
            OptimizerKind::Adam => Optimizer::Adam(Adam::new(len, lr, cfg)),
            OptimizerKind::Gd => Optimizer::Gd { lr },
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        match self {
            Optimizer::Adam(adam) => adam.step(params, grads),
            Optimizer::Gd { lr } => {
                for (p, g) in params.iter_mut().zip(grads) {
                    *p -= *lr * g;
                }
            }
        }
    }
}
