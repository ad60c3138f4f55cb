use serde::{Deserialize, Serialize};

use super::params::EncoderParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamWConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for AdamWConfig {
    fn default() -> Self {
        AdamWConfig { beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 0.2 }
    }
}

/// Adam with decoupled weight decay on rank-2 tensors only.
#[derive(Debug, Clone)]
pub struct AdamW {
    pub config: AdamWConfig,
    m: EncoderParams,
    v: EncoderParams,
    t: u64,
}

impl AdamW {
    pub fn new(config: AdamWConfig, params: &EncoderParams) -> Self {
        AdamW { config, m: params.zeros_like(), v: params.zeros_like(), t: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut EncoderParams, grad: &EncoderParams, lr: f64) {
        self.t += 1;
        let AdamWConfig { beta1, beta2, eps, weight_decay } = self.config;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        let tensors = params.tensors_mut().into_iter();
        let moments = self.m.tensors_mut().into_iter().zip(self.v.tensors_mut());
        for ((p, g), (m, v)) in tensors.zip(grad.tensors()).zip(moments) {
            let decay = if p.is_matrix() { 1.0 - lr * weight_decay } else { 1.0 };
            for (((pi, gi), mi), vi) in p.data.iter_mut().zip(&g.data).zip(m.data.iter_mut()).zip(v.data.iter_mut()) {
                *pi *= decay;
                *mi = beta1 * *mi + (1.0 - beta1) * gi;
                *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
                *pi -= lr * (*mi / c1) / ((*vi / c2).sqrt() + eps);
            }
        }
    }
}

/// Linear warmup to `peak` over `warmup` steps, then constant.
pub fn learning_rate(step: usize, peak: f64, warmup: usize) -> f64 {
    if warmup == 0 || step >= warmup {
        peak
    } else {
        peak * (step + 1) as f64 / warmup as f64
    }
}

/// Default warmup: min(1000, total_steps / 10).
pub fn default_warmup(total_steps: usize) -> usize {
    (total_steps / 10).min(1000)
}
