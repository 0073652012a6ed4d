use crate::layers::{Conv1dLayer, DenseLayer, DropoutLayer, LstmLayer, LstmSequenceCache, Mode, PoolKind, PoolLayer};
use crate::rng::Rng;
use crate::tensor::Tensor;
use crate::{Error, Result};

/// A node in a branch of a [`ModelGraph`](super::ModelGraph).
#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Dense(DenseLayer),
    Conv1d(Conv1dLayer),
    Dropout(DropoutLayer),
    Pool(PoolLayer),
    Lstm(LstmLayer),
}

#[derive(Debug, Clone)]
pub(crate) enum LayerCache {
    Dense { x: Tensor, y: Tensor },
    Conv1d { x: Tensor, y: Tensor },
    Dropout { mask: Tensor },
    Pool { x: Tensor },
    Lstm(LstmSequenceCache),
}

impl Layer {
    pub fn kind(&self) -> &'static str {
        match self {
            Layer::Dense(_) => "dense",
            Layer::Conv1d(_) => "conv1d",
            Layer::Dropout(_) => "dropout",
            Layer::Pool(p) => match p.kind {
                PoolKind::GlobalAverage => "global_avg_pool",
                PoolKind::Max { .. } => "max_pool",
            },
            Layer::Lstm(_) => "lstm",
        }
    }

    pub fn params(&self) -> Vec<(&'static str, &Tensor)> {
        match self {
            Layer::Dense(l) => vec![("weights", &l.weights), ("bias", &l.bias)],
            Layer::Conv1d(l) => vec![("kernels", &l.kernels), ("bias", &l.bias)],
            Layer::Lstm(l) => vec![("w_input", &l.cell.w_input), ("w_hidden", &l.cell.w_hidden), ("bias", &l.cell.bias)],
            Layer::Dropout(_) | Layer::Pool(_) => Vec::new(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            Layer::Dense(l) => vec![&mut l.weights, &mut l.bias],
            Layer::Conv1d(l) => vec![&mut l.kernels, &mut l.bias],
            Layer::Lstm(l) => vec![&mut l.cell.w_input, &mut l.cell.w_hidden, &mut l.cell.bias],
            Layer::Dropout(_) | Layer::Pool(_) => Vec::new(),
        }
    }

    /// Per-sample output shape for a per-sample input shape, or a
    /// construction error naming the offending layer.
    pub(crate) fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        let bad = |why: &str| Error::Construction(format!("{} layer cannot accept input {input:?}: {why}", self.kind()));
        match (self, input) {
            (Layer::Dense(l), [n]) if *n == l.in_features() => Ok(vec![l.out_features()]),
            (Layer::Dense(l), _) => Err(bad(&format!("expects [{}]", l.in_features()))),
            (Layer::Conv1d(l), [len, c]) if *c == l.in_channels() => match l.output_len(*len) {
                Some(out) => Ok(vec![out, l.filters()]),
                None => Err(bad(&format!("sequence shorter than kernel length {}", l.kernel_len()))),
            },
            (Layer::Conv1d(l), _) => Err(bad(&format!("expects [len, {}]", l.in_channels()))),
            (Layer::Dropout(_), _) => Ok(input.to_vec()),
            (Layer::Pool(p), [len, c]) => match (p.kind, p.output_len(*len)) {
                (PoolKind::GlobalAverage, Some(_)) => Ok(vec![*c]),
                (PoolKind::Max { .. }, Some(out)) => Ok(vec![out, *c]),
                _ => Err(bad("sequence shorter than pooling window")),
            },
            (Layer::Pool(_), _) => Err(bad("expects [len, channels]")),
            (Layer::Lstm(l), [len, c]) if *c == l.cell.inputs() && *len >= 1 => {
                if l.return_sequences {
                    Ok(vec![*len, l.cell.hidden()])
                } else {
                    Ok(vec![l.cell.hidden()])
                }
            }
            (Layer::Lstm(l), _) => Err(bad(&format!("expects [len, {}]", l.cell.inputs()))),
        }
    }

    pub(crate) fn forward(&self, x: Tensor, mode: Mode, rng: &mut Rng) -> Result<(Tensor, LayerCache)> {
        Ok(match self {
            Layer::Dense(l) => {
                let y = l.forward(&x)?;
                (y.clone(), LayerCache::Dense { x, y })
            }
            Layer::Conv1d(l) => {
                let y = l.forward(&x)?;
                (y.clone(), LayerCache::Conv1d { x, y })
            }
            Layer::Dropout(l) => {
                let (y, mask) = l.apply(&x, mode, rng);
                (y, LayerCache::Dropout { mask })
            }
            Layer::Pool(l) => (l.forward(&x)?, LayerCache::Pool { x }),
            Layer::Lstm(l) => {
                let (y, cache) = l.forward(&x)?;
                (y, LayerCache::Lstm(cache))
            }
        })
    }

    /// Forward pass that keeps no intermediates.
    pub(crate) fn infer(&self, x: &Tensor) -> Result<Tensor> {
        match self {
            Layer::Dense(l) => l.forward(x),
            Layer::Conv1d(l) => l.forward(x),
            Layer::Dropout(_) => Ok(x.clone()),
            Layer::Pool(l) => l.forward(x),
            Layer::Lstm(l) => Ok(l.forward(x)?.0),
        }
    }

    /// Returns the input gradient and parameter gradients in [`Layer::params`] order.
    pub(crate) fn backward(&self, cache: &LayerCache, grad_out: &Tensor) -> Result<(Tensor, Vec<Tensor>)> {
        match (self, cache) {
            (Layer::Dense(l), LayerCache::Dense { x, y }) => {
                let g = l.backward_from_output(x, y, grad_out)?;
                Ok((g.input, vec![g.weights, g.bias]))
            }
            (Layer::Conv1d(l), LayerCache::Conv1d { x, y }) => {
                let g = l.backward_from_output(x, y, grad_out)?;
                Ok((g.input, vec![g.kernels, g.bias]))
            }
            (Layer::Dropout(l), LayerCache::Dropout { mask }) => Ok((l.backward(mask, grad_out)?, Vec::new())),
            (Layer::Pool(l), LayerCache::Pool { x }) => Ok((l.backward(x, grad_out)?, Vec::new())),
            (Layer::Lstm(l), LayerCache::Lstm(cache)) => {
                let g = l.backward(cache, grad_out)?;
                Ok((g.input, vec![g.w_input, g.w_hidden, g.bias]))
            }
            _ => Err(Error::Usage(format!("forward cache does not belong to a {} layer", self.kind()))),
        }
    }
}
