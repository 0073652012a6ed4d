//! Standard LSTM cell and a sequence layer built from it.
//!
//! Gate pre-activations are packed in column blocks `[i | f | g | o]`:
//!
//! ```text
//! z   = x_t·W_x + h_{t-1}·W_h + b
//! i   = σ(z_i)   f = σ(z_f)   g = tanh(z_g)   o = σ(z_o)
//! c_t = f ⊙ c_{t-1} + i ⊙ g
//! h_t = o ⊙ tanh(c_t)
//! ```

use crate::layers::sigmoid;
use crate::rng::Rng;
use crate::tensor::{he_init, matmul, matmul_nt, matmul_tn, Tensor};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LstmCell {
    /// `[in × 4h]`
    pub w_input: Tensor,
    /// `[h × 4h]`
    pub w_hidden: Tensor,
    /// `[4h]`
    pub bias: Tensor,
}

/// Values saved by one forward step for its backward pass.
#[derive(Debug, Clone)]
pub struct LstmStepCache {
    x: Tensor,
    h_prev: Tensor,
    c_prev: Tensor,
    /// Activated gates, `[batch × 4h]` in `[i | f | g | o]` order.
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct LstmStep {
    pub h: Tensor,
    pub c: Tensor,
    pub cache: LstmStepCache,
}

#[derive(Debug, Clone)]
pub struct LstmCellGrads {
    pub input: Tensor,
    pub h_prev: Tensor,
    pub c_prev: Tensor,
    pub w_input: Tensor,
    pub w_hidden: Tensor,
    pub bias: Tensor,
}

impl LstmCell {
    /// He-initialized weights; forget-gate bias starts at 1.0, the rest at 0.
    pub fn new(inputs: usize, hidden: usize, rng: &mut Rng) -> Result<Self> {
        let mut bias = vec![0.0; 4 * hidden];
        bias[hidden..2 * hidden].fill(1.0);
        Ok(Self {
            w_input: he_init(inputs, &[inputs, 4 * hidden], rng)?,
            w_hidden: he_init(hidden, &[hidden, 4 * hidden], rng)?,
            bias: Tensor::from_raw(vec![4 * hidden], bias),
        })
    }

    pub fn from_parts(w_input: Tensor, w_hidden: Tensor, bias: Tensor) -> Result<Self> {
        let (_, four_h) = w_input.dims2("lstm")?;
        let (h, four_h2) = w_hidden.dims2("lstm")?;
        if four_h != 4 * h || four_h2 != four_h || bias.shape() != [four_h] {
            return Err(Error::dim("lstm", w_input.shape(), w_hidden.shape()));
        }
        Ok(Self { w_input, w_hidden, bias })
    }

    pub fn hidden(&self) -> usize {
        self.w_hidden.shape()[0]
    }

    pub fn inputs(&self) -> usize {
        self.w_input.shape()[0]
    }

    pub fn step(&self, x_t: &Tensor, h_prev: &Tensor, c_prev: &Tensor) -> Result<LstmStep> {
        let h = self.hidden();
        let (b, inputs) = x_t.dims2("lstm_step")?;
        if inputs != self.inputs() {
            return Err(Error::dim("lstm_step", x_t.shape(), self.w_input.shape()));
        }
        if h_prev.shape() != [b, h] || c_prev.shape() != [b, h] {
            return Err(Error::dim("lstm_step", h_prev.shape(), c_prev.shape()));
        }
        let z = matmul(x_t, &self.w_input)?.add(&matmul(h_prev, &self.w_hidden)?)?.add_row_bias(&self.bias)?;
        let mut gates = z.into_data();
        for row in gates.chunks_exact_mut(4 * h) {
            for (j, v) in row.iter_mut().enumerate() {
                *v = if (2 * h..3 * h).contains(&j) { v.tanh() } else { sigmoid(*v) };
            }
        }
        let cp = c_prev.data();
        let mut c = vec![0.0; b * h];
        let mut tanh_c = vec![0.0; b * h];
        let mut h_out = vec![0.0; b * h];
        for bi in 0..b {
            let gr = &gates[bi * 4 * h..(bi + 1) * 4 * h];
            for u in 0..h {
                let idx = bi * h + u;
                let (i, f, g, o) = (gr[u], gr[h + u], gr[2 * h + u], gr[3 * h + u]);
                c[idx] = f * cp[idx] + i * g;
                tanh_c[idx] = c[idx].tanh();
                h_out[idx] = o * tanh_c[idx];
            }
        }
        Ok(LstmStep {
            h: Tensor::from_raw(vec![b, h], h_out),
            c: Tensor::from_raw(vec![b, h], c),
            cache: LstmStepCache {
                x: x_t.clone(),
                h_prev: h_prev.clone(),
                c_prev: c_prev.clone(),
                gates,
                tanh_c,
            },
        })
    }

    /// Backward through one step given upstream gradients on `h_t` and `c_t`.
    pub fn step_backward(&self, cache: &LstmStepCache, grad_h: &Tensor, grad_c: &Tensor) -> Result<LstmCellGrads> {
        let h = self.hidden();
        let b = cache.h_prev.shape()[0];
        if grad_h.shape() != [b, h] || grad_c.shape() != [b, h] {
            return Err(Error::dim("lstm_step_backward", grad_h.shape(), &[b, h]));
        }
        let (dh, dc) = (grad_h.data(), grad_c.data());
        let cp = cache.c_prev.data();
        let mut dz = vec![0.0; b * 4 * h];
        let mut dc_prev = vec![0.0; b * h];
        for bi in 0..b {
            let gr = &cache.gates[bi * 4 * h..(bi + 1) * 4 * h];
            let dzr = &mut dz[bi * 4 * h..(bi + 1) * 4 * h];
            for u in 0..h {
                let idx = bi * h + u;
                let (i, f, g, o) = (gr[u], gr[h + u], gr[2 * h + u], gr[3 * h + u]);
                let tc = cache.tanh_c[idx];
                let dct = dc[idx] + dh[idx] * o * (1.0 - tc * tc);
                dzr[u] = dct * g * i * (1.0 - i);
                dzr[h + u] = dct * cp[idx] * f * (1.0 - f);
                dzr[2 * h + u] = dct * i * (1.0 - g * g);
                dzr[3 * h + u] = dh[idx] * tc * o * (1.0 - o);
                dc_prev[idx] = dct * f;
            }
        }
        let dz = Tensor::from_raw(vec![b, 4 * h], dz);
        Ok(LstmCellGrads {
            input: matmul_nt(&dz, &self.w_input)?,
            h_prev: matmul_nt(&dz, &self.w_hidden)?,
            c_prev: Tensor::from_raw(vec![b, h], dc_prev),
            w_input: matmul_tn(&cache.x, &dz)?,
            w_hidden: matmul_tn(&cache.h_prev, &dz)?,
            bias: dz.sum_rows()?,
        })
    }
}

/// Runs an [`LstmCell`] over `[batch × len × in]` from zero initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmLayer {
    pub cell: LstmCell,
    /// Emit `[batch × len × h]` instead of only the final `[batch × h]`.
    pub return_sequences: bool,
}

#[derive(Debug, Clone)]
pub struct LstmSequenceCache {
    steps: Vec<LstmStepCache>,
    batch: usize,
}

#[derive(Debug, Clone)]
pub struct LstmLayerGrads {
    pub input: Tensor,
    pub w_input: Tensor,
    pub w_hidden: Tensor,
    pub bias: Tensor,
}

impl LstmLayer {
    pub fn new(inputs: usize, hidden: usize, return_sequences: bool, rng: &mut Rng) -> Result<Self> {
        Ok(Self {
            cell: LstmCell::new(inputs, hidden, rng)?,
            return_sequences,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<(Tensor, LstmSequenceCache)> {
        let (b, len, c) = x.dims3("lstm_forward")?;
        if c != self.cell.inputs() {
            return Err(Error::dim("lstm_forward", x.shape(), self.cell.w_input.shape()));
        }
        let h = self.cell.hidden();
        let xd = x.data();
        let mut h_t = Tensor::zeros(&[b, h]);
        let mut c_t = Tensor::zeros(&[b, h]);
        let mut steps = Vec::with_capacity(len);
        let mut seq = if self.return_sequences { vec![0.0; b * len * h] } else { Vec::new() };
        for t in 0..len {
            let mut x_t = Vec::with_capacity(b * c);
            for bi in 0..b {
                x_t.extend_from_slice(&xd[(bi * len + t) * c..(bi * len + t + 1) * c]);
            }
            let step = self.cell.step(&Tensor::from_raw(vec![b, c], x_t), &h_t, &c_t)?;
            if self.return_sequences {
                for bi in 0..b {
                    seq[(bi * len + t) * h..(bi * len + t + 1) * h].copy_from_slice(&step.h.data()[bi * h..(bi + 1) * h]);
                }
            }
            h_t = step.h;
            c_t = step.c;
            steps.push(step.cache);
        }
        let out = if self.return_sequences { Tensor::from_raw(vec![b, len, h], seq) } else { h_t };
        Ok((out, LstmSequenceCache { steps, batch: b }))
    }

    /// Backpropagation through time.
    pub fn backward(&self, cache: &LstmSequenceCache, grad_out: &Tensor) -> Result<LstmLayerGrads> {
        let (b, len, h, c) = (cache.batch, cache.steps.len(), self.cell.hidden(), self.cell.inputs());
        let expected: Vec<usize> = if self.return_sequences { vec![b, len, h] } else { vec![b, h] };
        if grad_out.shape() != expected.as_slice() {
            return Err(Error::dim("lstm_backward", grad_out.shape(), &expected));
        }
        let gd = grad_out.data();
        let mut grad_w_input = Tensor::zeros(self.cell.w_input.shape());
        let mut grad_w_hidden = Tensor::zeros(self.cell.w_hidden.shape());
        let mut grad_bias = Tensor::zeros(self.cell.bias.shape());
        let mut grad_x = vec![0.0; b * len * c];
        let mut dh = if self.return_sequences { Tensor::zeros(&[b, h]) } else { grad_out.clone() };
        let mut dc = Tensor::zeros(&[b, h]);
        for t in (0..len).rev() {
            if self.return_sequences {
                let dd = dh.data_mut();
                for bi in 0..b {
                    for u in 0..h {
                        dd[bi * h + u] += gd[(bi * len + t) * h + u];
                    }
                }
            }
            let g = self.cell.step_backward(&cache.steps[t], &dh, &dc)?;
            grad_w_input.add_assign(&g.w_input)?;
            grad_w_hidden.add_assign(&g.w_hidden)?;
            grad_bias.add_assign(&g.bias)?;
            for bi in 0..b {
                grad_x[(bi * len + t) * c..(bi * len + t + 1) * c].copy_from_slice(&g.input.data()[bi * c..(bi + 1) * c]);
            }
            dh = g.h_prev;
            dc = g.c_prev;
        }
        Ok(LstmLayerGrads {
            input: Tensor::from_raw(vec![b, len, c], grad_x),
            w_input: grad_w_input,
            w_hidden: grad_w_hidden,
            bias: grad_bias,
        })
    }
}
