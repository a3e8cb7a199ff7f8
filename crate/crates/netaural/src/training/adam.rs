//! Adaptive-moment gradient descent over the checkpoint's trainable
//! tensors. Moments are kept in f64; the updated parameter is rounded
//! back to its 32-bit storage.

use serde::{Deserialize, Serialize};

use crate::model::{Gradients, ModelCheckpoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

pub struct Adam {
    cfg: AdamConfig,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(cfg: AdamConfig, ckpt: &ModelCheckpoint) -> Adam {
        let sizes: Vec<usize> = ckpt
            .tensors()
            .iter()
            .map(|t| if t.is_trainable() { t.data.len() } else { 0 })
            .collect();
        Adam {
            cfg,
            t: 0,
            m: sizes.iter().map(|&s| vec![0.0; s]).collect(),
            v: sizes.iter().map(|&s| vec![0.0; s]).collect(),
        }
    }

    pub fn step(&mut self, ckpt: &mut ModelCheckpoint, grads: &Gradients) {
        self.t += 1;
        let bc1 = 1.0 - self.cfg.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.cfg.beta2.powi(self.t as i32);
        for (i, tensor) in ckpt.tensors_mut().iter_mut().enumerate() {
            if !tensor.is_trainable() {
                continue;
            }
            let g = &grads.0[i];
            debug_assert_eq!(g.len(), tensor.data.len(), "{}", tensor.name);
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for j in 0..g.len() {
                m[j] = self.cfg.beta1 * m[j] + (1.0 - self.cfg.beta1) * g[j];
                v[j] = self.cfg.beta2 * v[j] + (1.0 - self.cfg.beta2) * g[j] * g[j];
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                let p = tensor.data[j] as f64;
                tensor.data[j] = (p - self.cfg.learning_rate * m_hat / (v_hat.sqrt() + self.cfg.eps)) as f32;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{m5_init, M5Config};

    #[test]
    fn step_moves_against_gradient() {
        let mut ckpt = m5_init(M5Config::tiny(160), 0).unwrap();
        let before = ckpt.tensor("fc.bias").unwrap().data[0];
        let grads = Gradients(
            ckpt.tensors()
                .iter()
                .map(|t| {
                    if t.is_trainable() {
                        vec![1.0; t.data.len()]
                    } else {
                        Vec::new()
                    }
                })
                .collect(),
        );
        let mut adam = Adam::new(AdamConfig::default(), &ckpt);
        adam.step(&mut ckpt, &grads);
        let after = ckpt.tensor("fc.bias").unwrap().data[0];
        assert!(after < before);
        // running statistics are untouched
        assert_eq!(ckpt.tensor("bn0.running_var").unwrap().data[0], 1.0);
    }
}
