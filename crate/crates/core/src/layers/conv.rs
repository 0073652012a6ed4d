use crate::layers::Activation;
use crate::rng::Rng;
use crate::tensor::{he_init, matmul, matmul_nt, matmul_tn, Tensor};
use crate::{Error, Result};

/// One-dimensional convolution with valid padding and unit stride.
///
/// Uses the cross-correlation convention (kernels are not flipped):
///
/// `y[b, t, f] = bias[f] + Σ_c Σ_j x[b, t + j, c] · kernels[f, c, j]`
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1dLayer {
    /// `[filters × in_channels × kernel_len]`
    pub kernels: Tensor,
    /// `[filters]`
    pub bias: Tensor,
    pub activation: Activation,
}

#[derive(Debug, Clone)]
pub struct Conv1dGrads {
    pub input: Tensor,
    pub kernels: Tensor,
    pub bias: Tensor,
}

impl Conv1dLayer {
    pub fn new(filters: usize, in_channels: usize, kernel_len: usize, activation: Activation, rng: &mut Rng) -> Result<Self> {
        if kernel_len == 0 {
            return Err(Error::arg("kernel_len must be >= 1"));
        }
        Ok(Self {
            kernels: he_init(in_channels * kernel_len, &[filters, in_channels, kernel_len], rng)?,
            bias: Tensor::zeros(&[filters]),
            activation,
        })
    }

    pub fn from_parts(kernels: Tensor, bias: Tensor, activation: Activation) -> Result<Self> {
        let (f, _, _) = kernels.dims3("conv1d")?;
        if bias.shape() != [f] {
            return Err(Error::dim("conv1d", kernels.shape(), bias.shape()));
        }
        Ok(Self { kernels, bias, activation })
    }

    pub fn filters(&self) -> usize {
        self.kernels.shape()[0]
    }

    pub fn in_channels(&self) -> usize {
        self.kernels.shape()[1]
    }

    pub fn kernel_len(&self) -> usize {
        self.kernels.shape()[2]
    }

    /// Valid-padding output length, or `None` if the input is shorter than the kernel.
    pub fn output_len(&self, len: usize) -> Option<usize> {
        (len >= self.kernel_len()).then(|| len - self.kernel_len() + 1)
    }

    fn kernel_matrix(&self) -> Tensor {
        let (f, c, k) = (self.filters(), self.in_channels(), self.kernel_len());
        Tensor::from_raw(vec![f, c * k], self.kernels.data().to_vec())
    }

    fn check_input(&self, x: &Tensor, op: &'static str) -> Result<(usize, usize, usize)> {
        let (b, len, c) = x.dims3(op)?;
        if c != self.in_channels() {
            return Err(Error::dim(op, x.shape(), self.kernels.shape()));
        }
        let out_len = self.output_len(len).ok_or_else(|| Error::dim(op, x.shape(), self.kernels.shape()))?;
        Ok((b, len, out_len))
    }

    /// Unrolls every receptive field into a row: `[batch·out_len × in_ch·k]`.
    fn im2col(&self, x: &Tensor, b: usize, len: usize, out_len: usize) -> Tensor {
        let (c, k) = (self.in_channels(), self.kernel_len());
        let xd = x.data();
        let mut cols = vec![0.0; b * out_len * c * k];
        for bi in 0..b {
            for t in 0..out_len {
                let row = &mut cols[(bi * out_len + t) * c * k..(bi * out_len + t + 1) * c * k];
                for ci in 0..c {
                    for j in 0..k {
                        row[ci * k + j] = xd[(bi * len + t + j) * c + ci];
                    }
                }
            }
        }
        Tensor::from_raw(vec![b * out_len, c * k], cols)
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let (b, len, out_len) = self.check_input(x, "conv1d_forward")?;
        let patches = self.im2col(x, b, len, out_len);
        let z = matmul(&patches, &self.kernel_matrix().transpose()?)?.add_row_bias(&self.bias)?;
        let y = match self.activation {
            Activation::Linear => z,
            act => z.map(|v| act.apply(v)),
        };
        y.reshape(&[b, out_len, self.filters()])
    }

    pub fn backward(&self, x: &Tensor, grad_out: &Tensor) -> Result<Conv1dGrads> {
        let y = self.forward(x)?;
        self.backward_from_output(x, &y, grad_out)
    }

    pub(crate) fn backward_from_output(&self, x: &Tensor, y: &Tensor, grad_out: &Tensor) -> Result<Conv1dGrads> {
        let (b, len, out_len) = self.check_input(x, "conv1d_backward")?;
        if grad_out.shape() != y.shape() {
            return Err(Error::dim("conv1d_backward", grad_out.shape(), y.shape()));
        }
        let (f, c, k) = (self.filters(), self.in_channels(), self.kernel_len());
        let dz = match self.activation {
            Activation::Linear => grad_out.clone(),
            act => grad_out.zip_map(y, "conv1d_backward", |g, out| g * act.grad_from_output(out))?,
        }
        .reshape(&[b * out_len, f])?;

        let patches = self.im2col(x, b, len, out_len);
        // The filter axis is the long one, so both products keep it innermost.
        let grad_kernels = matmul_tn(&patches, &dz)?.transpose()?.reshape(&[f, c, k])?;
        let grad_bias = dz.sum_rows()?;
        let grad_patches = matmul_nt(&dz, &self.kernel_matrix().transpose()?)?;

        let mut grad_x = vec![0.0; b * len * c];
        let gp = grad_patches.data();
        for bi in 0..b {
            for t in 0..out_len {
                let row = &gp[(bi * out_len + t) * c * k..(bi * out_len + t + 1) * c * k];
                for ci in 0..c {
                    for j in 0..k {
                        grad_x[(bi * len + t + j) * c + ci] += row[ci * k + j];
                    }
                }
            }
        }
        Ok(Conv1dGrads {
            input: Tensor::from_raw(vec![b, len, c], grad_x),
            kernels: grad_kernels,
            bias: grad_bias,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(kernel: &[f64], bias: f64) -> Conv1dLayer {
        Conv1dLayer::from_parts(
            Tensor::new(&[1, 1, kernel.len()], kernel.to_vec()).unwrap(),
            Tensor::new(&[1], vec![bias]).unwrap(),
            Activation::Linear,
        )
        .unwrap()
    }

    fn series(values: &[f64]) -> Tensor {
        Tensor::new(&[1, values.len(), 1], values.to_vec()).unwrap()
    }

    #[test]
    fn difference_kernel() {
        let y = single(&[1.0, 0.0, -1.0], 0.0).forward(&series(&[1.0, 2.0, 3.0, 4.0, 5.0])).unwrap();
        assert_eq!(y.shape(), &[1, 3, 1]);
        assert_eq!(y.data(), &[-2.0, -2.0, -2.0]);
    }

    #[test]
    fn identity_and_zero_kernels() {
        let x = series(&[0.5, -1.0, 9.0, 2.0]);
        assert_eq!(single(&[1.0], 0.0).forward(&x).unwrap().data(), x.data());
        let y = single(&[0.0, 0.0], 2.5).forward(&x).unwrap();
        assert!(y.data().iter().all(|&v| v == 2.5));
    }

    #[test]
    fn identity_kernel_gradient_passthrough() {
        let x = series(&[0.5, -1.0, 9.0]);
        let g_out = series(&[1.0, 2.0, 3.0]);
        let g = single(&[1.0], 0.0).backward(&x, &g_out).unwrap();
        assert_eq!(g.input, g_out);
    }

    #[test]
    fn zero_upstream_gradient() {
        let layer = Conv1dLayer::new(3, 2, 2, Activation::Relu, &mut Rng::new(4)).unwrap();
        let x = Tensor::full(&[2, 5, 2], 0.7);
        let g = layer.backward(&x, &Tensor::zeros(&[2, 4, 3])).unwrap();
        assert_eq!(g.input.max_abs() + g.kernels.max_abs() + g.bias.max_abs(), 0.0);
    }

    #[test]
    fn too_short_input_is_dimension_error() {
        let layer = single(&[1.0, 1.0, 1.0], 0.0);
        assert!(matches!(layer.forward(&series(&[1.0, 2.0])), Err(Error::Dimension { .. })));
    }

    #[test]
    fn multi_channel_matches_direct_sum() {
        let mut rng = Rng::new(8);
        let layer = Conv1dLayer::new(2, 3, 2, Activation::Linear, &mut rng).unwrap();
        let x = he_init(1, &[1, 4, 3], &mut rng).unwrap();
        let y = layer.forward(&x).unwrap();
        let (k, xd) = (layer.kernels.data(), x.data());
        for t in 0..3 {
            for f in 0..2 {
                let mut s = 0.0;
                for c in 0..3 {
                    for j in 0..2 {
                        s += xd[(t + j) * 3 + c] * k[(f * 3 + c) * 2 + j];
                    }
                }
                assert!((y.data()[t * 2 + f] - s).abs() < 1e-12);
            }
        }
    }
}
