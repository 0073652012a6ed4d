use serde::{Deserialize, Serialize};

use crate::tensor::Tensor;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PoolKind {
    /// `[batch × len × ch] → [batch × ch]`
    GlobalAverage,
    /// Non-overlapping windows: `[batch × len × ch] → [batch × len / window × ch]`.
    /// A trailing partial window is discarded.
    Max { window: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolLayer {
    pub kind: PoolKind,
}

impl PoolLayer {
    pub fn global_average() -> Self {
        Self { kind: PoolKind::GlobalAverage }
    }

    pub fn max(window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::arg("max-pool window must be >= 1"));
        }
        Ok(Self {
            kind: PoolKind::Max { window },
        })
    }

    /// Output length along the time axis, `None` for global pooling or when the input is too short.
    pub fn output_len(&self, len: usize) -> Option<usize> {
        match self.kind {
            PoolKind::GlobalAverage => (len >= 1).then_some(1),
            PoolKind::Max { window } => (len >= window).then(|| len / window),
        }
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let (b, len, c) = x.dims3("pool_forward")?;
        let xd = x.data();
        match self.kind {
            PoolKind::GlobalAverage => {
                let mut out = vec![0.0; b * c];
                for bi in 0..b {
                    let dst = &mut out[bi * c..(bi + 1) * c];
                    for t in 0..len {
                        let src = &xd[(bi * len + t) * c..(bi * len + t + 1) * c];
                        dst.iter_mut().zip(src).for_each(|(d, s)| *d += s);
                    }
                    dst.iter_mut().for_each(|d| *d /= len as f64);
                }
                Ok(Tensor::from_raw(vec![b, c], out))
            }
            PoolKind::Max { window } => {
                let (out, _) = self.max_with_argmax(x, b, len, c, window)?;
                Ok(out)
            }
        }
    }

    fn max_with_argmax(&self, x: &Tensor, b: usize, len: usize, c: usize, window: usize) -> Result<(Tensor, Vec<usize>)> {
        if len < window {
            return Err(Error::dim("pool_forward", x.shape(), &[window]));
        }
        let out_len = len / window;
        let xd = x.data();
        let mut out = vec![0.0; b * out_len * c];
        let mut arg = vec![0; b * out_len * c];
        for bi in 0..b {
            for w in 0..out_len {
                for ci in 0..c {
                    let mut best = f64::NEG_INFINITY;
                    let mut best_idx = 0;
                    for j in 0..window {
                        let idx = (bi * len + w * window + j) * c + ci;
                        if xd[idx] > best {
                            best = xd[idx];
                            best_idx = idx;
                        }
                    }
                    let o = (bi * out_len + w) * c + ci;
                    out[o] = best;
                    arg[o] = best_idx;
                }
            }
        }
        Ok((Tensor::from_raw(vec![b, out_len, c], out), arg))
    }

    /// Gradient with respect to the input. Max pooling routes each window's
    /// gradient to its first maximal element.
    pub fn backward(&self, x: &Tensor, grad_out: &Tensor) -> Result<Tensor> {
        let (b, len, c) = x.dims3("pool_backward")?;
        match self.kind {
            PoolKind::GlobalAverage => {
                if grad_out.shape() != [b, c] {
                    return Err(Error::dim("pool_backward", grad_out.shape(), &[b, c]));
                }
                let gd = grad_out.data();
                let mut gx = vec![0.0; b * len * c];
                for bi in 0..b {
                    for t in 0..len {
                        for ci in 0..c {
                            gx[(bi * len + t) * c + ci] = gd[bi * c + ci] / len as f64;
                        }
                    }
                }
                Ok(Tensor::from_raw(vec![b, len, c], gx))
            }
            PoolKind::Max { window } => {
                let (out, arg) = self.max_with_argmax(x, b, len, c, window)?;
                if grad_out.shape() != out.shape() {
                    return Err(Error::dim("pool_backward", grad_out.shape(), out.shape()));
                }
                let mut gx = vec![0.0; b * len * c];
                for (g, &src) in grad_out.data().iter().zip(&arg) {
                    gx[src] += g;
                }
                Ok(Tensor::from_raw(vec![b, len, c], gx))
            }
        }
    }
}
