//! Adaptive-moment gradient descent with global-norm clipping.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Rescale the gradient to this Euclidean norm when it is larger.
    pub clip_norm: Option<f64>,
    /// When set, the step size decays geometrically to this value over a run.
    pub final_learning_rate: Option<f64>,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            clip_norm: Some(10.0),
            final_learning_rate: None,
        }
    }
}

impl AdamConfig {
    /// Step size for `epoch` (0-based) of a `total`-epoch run.
    pub fn learning_rate_at(&self, epoch: usize, total: usize) -> f64 {
        match self.final_learning_rate {
            Some(end) if total > 1 => {
                let frac = epoch.min(total - 1) as f64 / (total - 1) as f64;
                self.learning_rate * (end / self.learning_rate).powf(frac)
            }
            _ => self.learning_rate,
        }
    }

    /// Copy with the step size for `epoch` filled in.
    pub fn at_epoch(&self, epoch: usize, total: usize) -> Self {
        Self {
            learning_rate: self.learning_rate_at(epoch, total),
            final_learning_rate: None,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    /// One in-place update of `params` against `grad`.
    pub fn step(&mut self, cfg: &AdamConfig, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), grad.len());
        assert_eq!(params.len(), self.m.len());
        let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        let scale = match cfg.clip_norm {
            Some(c) if norm > c => c / norm,
            _ => 1.0,
        };
        self.t += 1;
        let bc1 = 1.0 - cfg.beta1.powi(self.t as i32);
        let bc2 = 1.0 - cfg.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grad[i] * scale;
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * g;
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
}
