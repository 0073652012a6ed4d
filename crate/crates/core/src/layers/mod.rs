//! Forward and backward passes for every layer type used by the four
//! architectures. Backward passes are written out by hand and return exact
//! analytic gradients; `tests/gradcheck.rs` holds them to finite differences.

mod conv;
mod dense;
mod dropout;
mod lstm;
mod pool;

use serde::{Deserialize, Serialize};

pub use conv::{Conv1dGrads, Conv1dLayer};
pub use dense::{DenseGrads, DenseLayer};
pub use dropout::DropoutLayer;
pub use lstm::{LstmCell, LstmCellGrads, LstmLayer, LstmLayerGrads, LstmSequenceCache, LstmStep, LstmStepCache};
pub use pool::{PoolKind, PoolLayer};

/// Whether stochastic layers are active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Train,
    Inference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Linear,
}

impl Activation {
    #[inline]
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Linear => z,
        }
    }

    /// Derivative expressed through the activation's output.
    #[inline]
    pub(crate) fn grad_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Linear => 1.0,
        }
    }
}

#[inline]
pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
