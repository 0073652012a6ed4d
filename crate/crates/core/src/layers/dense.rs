use crate::layers::Activation;
use crate::rng::Rng;
use crate::tensor::{he_init, matmul, matmul_nt, matmul_tn, Tensor};
use crate::{Error, Result};

/// Fully connected layer computing `f(x·W + b)` over a `[batch × in]` input.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `[in × out]`
    pub weights: Tensor,
    /// `[out]`
    pub bias: Tensor,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub struct DenseGrads {
    pub input: Tensor,
    pub weights: Tensor,
    pub bias: Tensor,
}

impl DenseLayer {
    /// He-initialized weights, zero bias.
    pub fn new(inputs: usize, outputs: usize, activation: Activation, rng: &mut Rng) -> Result<Self> {
        Ok(Self {
            weights: he_init(inputs, &[inputs, outputs], rng)?,
            bias: Tensor::zeros(&[outputs]),
            activation,
        })
    }

    pub fn from_parts(weights: Tensor, bias: Tensor, activation: Activation) -> Result<Self> {
        let (_, out) = weights.dims2("dense")?;
        if bias.shape() != [out] {
            return Err(Error::dim("dense", weights.shape(), bias.shape()));
        }
        Ok(Self { weights, bias, activation })
    }

    pub fn in_features(&self) -> usize {
        self.weights.shape()[0]
    }

    pub fn out_features(&self) -> usize {
        self.weights.shape()[1]
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let (_, cols) = x.dims2("dense_forward")?;
        if cols != self.in_features() {
            return Err(Error::dim("dense_forward", x.shape(), self.weights.shape()));
        }
        let z = matmul(x, &self.weights)?.add_row_bias(&self.bias)?;
        Ok(match self.activation {
            Activation::Linear => z,
            act => z.map(|v| act.apply(v)),
        })
    }

    pub fn backward(&self, x: &Tensor, grad_out: &Tensor) -> Result<DenseGrads> {
        let y = self.forward(x)?;
        self.backward_from_output(x, &y, grad_out)
    }

    /// Backward pass reusing the forward output `y` for the activation derivative.
    pub(crate) fn backward_from_output(&self, x: &Tensor, y: &Tensor, grad_out: &Tensor) -> Result<DenseGrads> {
        if grad_out.shape() != y.shape() {
            return Err(Error::dim("dense_backward", grad_out.shape(), y.shape()));
        }
        let dz = match self.activation {
            Activation::Linear => grad_out.clone(),
            act => grad_out.zip_map(y, "dense_backward", |g, out| g * act.grad_from_output(out))?,
        };
        Ok(DenseGrads {
            input: matmul_nt(&dz, &self.weights)?,
            weights: matmul_tn(x, &dz)?,
            bias: dz.sum_rows()?,
        })
    }
}
