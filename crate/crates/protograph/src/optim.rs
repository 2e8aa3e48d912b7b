//! Adam with bias correction and global-norm gradient clipping.

use serde::{Deserialize, Serialize};

use crate::model::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

pub struct Adam {
    pub config: AdamConfig,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(config: AdamConfig, params: &ModelParams) -> Self {
        let m = params.tensors.iter().map(|t| vec![0.0; t.values.len()]).collect();
        let v = params.tensors.iter().map(|t| vec![0.0; t.values.len()]).collect();
        Adam { config, step: 0, m, v }
    }

    /// One update in place. `grads` holds one slice per tensor in
    /// layout order, as `BoundModel::gradients` returns them.
    pub fn step(&mut self, params: &mut ModelParams, grads: &[Vec<f64>]) {
        assert_eq!(grads.len(), params.tensors.len(), "one gradient per tensor");
        self.step += 1;
        let t = self.step as f64;
        let c = self.config;
        let bc1 = 1.0 - c.beta1.powf(t);
        let bc2 = 1.0 - c.beta2.powf(t);
        for (ti, tensor) in params.tensors.iter_mut().enumerate() {
            assert_eq!(grads[ti].len(), tensor.values.len());
            for (i, &g) in grads[ti].iter().enumerate() {
                let m = &mut self.m[ti][i];
                let v = &mut self.v[ti][i];
                *m = c.beta1 * *m + (1.0 - c.beta1) * g;
                *v = c.beta2 * *v + (1.0 - c.beta2) * g * g;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                tensor.values[i] -= c.lr * m_hat / (v_hat.sqrt() + c.eps);
            }
        }
    }
}

/// Scales the whole gradient set so its global L2 norm is at most
/// `max_norm`. Returns the norm before clipping.
pub fn clip_global_norm(grads: &mut [Vec<f64>], max_norm: f64) -> f64 {
    assert!(max_norm > 0.0, "clip threshold must be positive");
    let sq: f64 = grads.iter().flatten().map(|g| g * g).sum();
    let norm = sq.sqrt();
    if norm > max_norm {
        let scale = max_norm / norm;
        for g in grads.iter_mut().flatten() {
            *g *= scale;
        }
    }
    norm
}
