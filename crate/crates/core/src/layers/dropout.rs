use rand::Rng as _;

use crate::layers::Mode;
use crate::rng::Rng;
use crate::tensor::Tensor;
use crate::{Error, Result};

/// Inverted dropout: survivors are scaled by `1 / (1 - rate)` at train time so
/// inference is the identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DropoutLayer {
    rate: f64,
}

impl DropoutLayer {
    pub fn new(rate: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::arg(format!("dropout rate must be in [0, 1), got {rate}")));
        }
        Ok(Self { rate })
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// Returns the output and the keep-mask (1 = kept, 0 = dropped).
    pub fn apply(&self, x: &Tensor, mode: Mode, rng: &mut Rng) -> (Tensor, Tensor) {
        if mode == Mode::Inference || self.rate == 0.0 {
            return (x.clone(), Tensor::full(x.shape(), 1.0));
        }
        let inner = rng.inner();
        let mask_data: Vec<f64> = (0..x.len()).map(|_| if inner.random::<f64>() < self.rate { 0.0 } else { 1.0 }).collect();
        let mask = Tensor::from_raw(x.shape().to_vec(), mask_data);
        let scale = 1.0 / (1.0 - self.rate);
        let y = x.zip_map(&mask, "dropout", |v, m| v * m * scale).expect("mask shares shape");
        (y, mask)
    }

    pub fn backward(&self, mask: &Tensor, grad_out: &Tensor) -> Result<Tensor> {
        let scale = 1.0 / (1.0 - self.rate);
        grad_out.zip_map(mask, "dropout_backward", |g, m| g * m * scale)
    }
}
