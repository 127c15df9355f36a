use super::mlp::{Gradients, MlpWeights};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// AdamW with decoupled weight decay and bias-corrected moments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamW {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub step: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl AdamW {
    pub fn new(weights: &MlpWeights, lr: f64, weight_decay: f64) -> Self {
        let zeros: Vec<Vec<f64>> = weights.params().map(|t| vec![0.0; t.len()]).collect();
        AdamW {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay,
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    /// Applies one update in place. Decay is applied to the weights before the Adam step.
    pub fn update(&mut self, weights: &mut MlpWeights, grads: &Gradients) -> Result<()> {
        let n_params = weights.params().count();
        if n_params != self.first.len() || grads.params().count() != n_params {
            return Err(Error::shape(self.first.len(), n_params));
        }
        self.step += 1;
        let t = self.step as f64;
        let c1 = 1.0 - self.beta1.powf(t);
        let c2 = 1.0 - self.beta2.powf(t);
        let decay = 1.0 - self.lr * self.weight_decay;
        for (((w, g), m), v) in weights
            .params_mut()
            .zip(grads.params())
            .zip(self.first.iter_mut())
            .zip(self.second.iter_mut())
        {
            if w.len() != g.len() || w.len() != m.len() {
                return Err(Error::shape(m.len(), g.len()));
            }
            for i in 0..w.values.len() {
                let gi = g.values[i];
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * gi;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * gi * gi;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                w.values[i] = w.values[i] * decay - self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}
