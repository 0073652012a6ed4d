use serde::{Deserialize, Serialize};

use crate::models::{Gradients, ModelGraph};
use crate::tensor::Tensor;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with bias-corrected moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    t: u64,
}

impl AdamState {
    pub fn new(shapes: &[&[usize]], config: AdamConfig) -> Self {
        Self {
            config,
            m: shapes.iter().map(|s| Tensor::zeros(s)).collect(),
            v: shapes.iter().map(|s| Tensor::zeros(s)).collect(),
            t: 0,
        }
    }

    pub fn for_model(model: &ModelGraph, config: AdamConfig) -> Self {
        let params = model.params();
        let shapes: Vec<&[usize]> = params.iter().map(|p| p.tensor.shape()).collect();
        Self::new(&shapes, config)
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn first_moments(&self) -> &[Tensor] {
        &self.m
    }

    pub fn second_moments(&self) -> &[Tensor] {
        &self.v
    }

    /// Applies one update in place. Gradients are validated in full before
    /// anything is modified, so a rejected step leaves parameters and state untouched.
    pub fn step(&mut self, params: &mut [&mut Tensor], grads: &Gradients, names: &[String]) -> Result<()> {
        if params.len() != self.m.len() || grads.tensors.len() != self.m.len() {
            return Err(Error::arg(format!(
                "optimizer tracks {} tensors, got {} parameters and {} gradients",
                self.m.len(),
                params.len(),
                grads.tensors.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(&grads.tensors).enumerate() {
            let name = names.get(i).map_or("?", String::as_str);
            if p.shape() != g.shape() || p.shape() != self.m[i].shape() {
                return Err(Error::Dimension {
                    op: "adam_step",
                    lhs: p.shape().to_vec(),
                    rhs: g.shape().to_vec(),
                });
            }
            if let Some(j) = g.data().iter().position(|v| !v.is_finite()) {
                return Err(Error::Numeric {
                    param: name.to_string(),
                    detail: format!("gradient element {j} is {}", g.data()[j]),
                });
            }
        }

        self.t += 1;
        let AdamConfig { lr, beta1, beta2, eps } = self.config;
        let bc1 = 1.0 - beta1.powi(self.t as i32);
        let bc2 = 1.0 - beta2.powi(self.t as i32);
        for ((p, g), (m, v)) in params.iter_mut().zip(&grads.tensors).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            let (pd, gd) = (p.data_mut(), g.data());
            for (((w, &gi), mi), vi) in pd.iter_mut().zip(gd).zip(m.data_mut()).zip(v.data_mut()) {
                *mi = beta1 * *mi + (1.0 - beta1) * gi;
                *vi = beta2 * *vi + (1.0 - beta2) * gi * gi;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *w -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
