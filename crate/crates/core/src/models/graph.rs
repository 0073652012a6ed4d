use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::layers::{Activation, Conv1dLayer, DenseLayer, DropoutLayer, LstmLayer, Mode, PoolLayer};
use crate::models::layer::{Layer, LayerCache};
use crate::rng::Rng;
use crate::tensor::Tensor;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Dwrpm,
    Mlp,
    Cnn,
    Lstm,
}

impl Architecture {
    pub const ALL: [Architecture; 4] = [Architecture::Dwrpm, Architecture::Mlp, Architecture::Cnn, Architecture::Lstm];

    pub fn name(self) -> &'static str {
        match self {
            Architecture::Dwrpm => "dwrpm",
            Architecture::Mlp => "mlp",
            Architecture::Cnn => "cnn",
            Architecture::Lstm => "lstm",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Architecture::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::arg(format!("unknown architecture {s:?} (expected dwrpm, mlp, cnn or lstm)")))
    }
}

/// Hyperparameters for one of the four architectures. The defaults are the
/// published configurations; smaller values give the miniature models used
/// in gradient checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "arch", rename_all = "lowercase")]
pub enum ArchSpec {
    Dwrpm {
        deep_widths: Vec<usize>,
        dropout: f64,
        filters: usize,
        kernel_len: usize,
    },
    Mlp {
        hidden: Vec<usize>,
        dropout: f64,
    },
    Cnn {
        filters: usize,
        kernel_len: usize,
        pool_window: usize,
        dropout: f64,
    },
    Lstm {
        hidden: usize,
        dropout: f64,
    },
}

impl ArchSpec {
    pub fn default_for(arch: Architecture) -> Self {
        match arch {
            Architecture::Dwrpm => ArchSpec::Dwrpm {
                deep_widths: vec![300, 200, 100, 50],
                dropout: 0.3,
                filters: 100,
                kernel_len: 5,
            },
            Architecture::Mlp => ArchSpec::Mlp {
                hidden: vec![300, 200, 100],
                dropout: 0.3,
            },
            Architecture::Cnn => ArchSpec::Cnn {
                filters: 100,
                kernel_len: 5,
                pool_window: 2,
                dropout: 0.2,
            },
            Architecture::Lstm => ArchSpec::Lstm { hidden: 50, dropout: 0.3 },
        }
    }

    pub fn architecture(&self) -> Architecture {
        match self {
            ArchSpec::Dwrpm { .. } => Architecture::Dwrpm,
            ArchSpec::Mlp { .. } => Architecture::Mlp,
            ArchSpec::Cnn { .. } => Architecture::Cnn,
            ArchSpec::Lstm { .. } => Architecture::Lstm,
        }
    }

    /// Same topology with every dropout rate set to zero.
    pub fn without_dropout(&self) -> Self {
        let mut spec = self.clone();
        match &mut spec {
            ArchSpec::Dwrpm { dropout, .. } | ArchSpec::Mlp { dropout, .. } | ArchSpec::Cnn { dropout, .. } | ArchSpec::Lstm { dropout, .. } => *dropout = 0.0,
        }
        spec
    }

    pub fn build(&self, seq_len: usize, rng: &mut Rng) -> Result<ModelGraph> {
        let dense_stack = |name: &str, widths: &[usize], dropout: f64, rng: &mut Rng| -> Result<Branch> {
            let mut layers = Vec::new();
            let mut prev = seq_len;
            for &w in widths {
                layers.push(Layer::Dense(DenseLayer::new(prev, w, Activation::Relu, rng)?));
                layers.push(Layer::Dropout(DropoutLayer::new(dropout)?));
                prev = w;
            }
            Ok(Branch::new(name, BranchInput::Flat, layers))
        };

        let (branches, join) = match self {
            ArchSpec::Dwrpm {
                deep_widths,
                dropout,
                filters,
                kernel_len,
            } => {
                if seq_len < *kernel_len {
                    return Err(Error::Construction(format!(
                        "seq_len {seq_len} is shorter than the wide-branch kernel length {kernel_len}"
                    )));
                }
                let wide = Branch::new(
                    "wide",
                    BranchInput::Sequence,
                    vec![
                        Layer::Conv1d(Conv1dLayer::new(*filters, 1, *kernel_len, Activation::Linear, rng)?),
                        Layer::Pool(PoolLayer::global_average()),
                    ],
                );
                let deep = dense_stack("deep", deep_widths, *dropout, rng)?;
                (vec![wide, deep], vec![JoinPart::Branch(0), JoinPart::Coords, JoinPart::Branch(1)])
            }
            ArchSpec::Mlp { hidden, dropout } => (vec![dense_stack("mlp", hidden, *dropout, rng)?], vec![JoinPart::Branch(0), JoinPart::Coords]),
            ArchSpec::Cnn {
                filters,
                kernel_len,
                pool_window,
                dropout,
            } => {
                let conv = |c_in: usize, rng: &mut Rng| Conv1dLayer::new(*filters, c_in, *kernel_len, Activation::Relu, rng).map(Layer::Conv1d);
                let layers = vec![
                    conv(1, rng)?,
                    conv(*filters, rng)?,
                    Layer::Pool(PoolLayer::max(*pool_window)?),
                    Layer::Dropout(DropoutLayer::new(*dropout)?),
                    conv(*filters, rng)?,
                    Layer::Pool(PoolLayer::global_average()),
                    Layer::Dropout(DropoutLayer::new(*dropout)?),
                ];
                (
                    vec![Branch::new("cnn", BranchInput::Sequence, layers)],
                    vec![JoinPart::Branch(0), JoinPart::Coords],
                )
            }
            ArchSpec::Lstm { hidden, dropout } => {
                let layers = vec![
                    Layer::Lstm(LstmLayer::new(1, *hidden, true, rng)?),
                    Layer::Dropout(DropoutLayer::new(*dropout)?),
                    Layer::Lstm(LstmLayer::new(*hidden, *hidden, false, rng)?),
                ];
                (
                    vec![Branch::new("lstm", BranchInput::Sequence, layers)],
                    vec![JoinPart::Branch(0), JoinPart::Coords],
                )
            }
        };
        ModelGraph::assemble(self.clone(), seq_len, branches, join, rng)
    }
}

/// DWRPM with the published configuration.
pub fn build_dwrpm(seq_len: usize, rng: &mut Rng) -> Result<ModelGraph> {
    ArchSpec::default_for(Architecture::Dwrpm).build(seq_len, rng)
}

pub fn build_mlp_baseline(seq_len: usize, rng: &mut Rng) -> Result<ModelGraph> {
    ArchSpec::default_for(Architecture::Mlp).build(seq_len, rng)
}

pub fn build_cnn_baseline(seq_len: usize, rng: &mut Rng) -> Result<ModelGraph> {
    ArchSpec::default_for(Architecture::Cnn).build(seq_len, rng)
}

pub fn build_lstm_baseline(seq_len: usize, rng: &mut Rng) -> Result<ModelGraph> {
    ArchSpec::default_for(Architecture::Lstm).build(seq_len, rng)
}

/// How a branch sees the rainfall window.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchInput {
    /// `[batch × seq_len]`, for dense stacks.
    Flat,
    /// `[batch × seq_len × 1]`, for convolutional and recurrent stacks.
    Sequence,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub name: String,
    pub input: BranchInput,
    pub layers: Vec<Layer>,
}

impl Branch {
    fn new(name: &str, input: BranchInput, layers: Vec<Layer>) -> Self {
        Self {
            name: name.to_string(),
            input,
            layers,
        }
    }
}

/// One segment of the joint head's input vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JoinPart {
    Branch(usize),
    /// The `(latitude, longitude)` pair, fed in directly.
    Coords,
}

/// Linear output unit over the concatenation of branch outputs and
/// coordinates. For DWRPM the segments are `[h_cn | h_co | h_d]`, so
/// `y = k_cn·h_cn + k_co·h_co + k_d·h_d + bias`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointHead {
    pub dense: DenseLayer,
    parts: Vec<(JoinPart, usize)>,
}

impl JointHead {
    pub fn parts(&self) -> &[(JoinPart, usize)] {
        &self.parts
    }

    pub fn input_width(&self) -> usize {
        self.parts.iter().map(|(_, w)| w).sum()
    }

    fn offset(&self, part: JoinPart) -> Option<(usize, usize)> {
        let mut off = 0;
        for &(p, w) in &self.parts {
            if p == part {
                return Some((off, w));
            }
            off += w;
        }
        None
    }

    /// Weight vector applied to one segment (`k_cn`, `k_co` or `k_d`).
    pub fn segment_weights(&self, part: JoinPart) -> Option<&[f64]> {
        self.offset(part).map(|(off, w)| &self.dense.weights.data()[off..off + w])
    }

    pub fn segment_weights_mut(&mut self, part: JoinPart) -> Option<&mut [f64]> {
        let (off, w) = self.offset(part)?;
        Some(&mut self.dense.weights.data_mut()[off..off + w])
    }

    pub fn bias(&self) -> f64 {
        self.dense.bias.data()[0]
    }

    pub fn set_bias(&mut self, value: f64) {
        self.dense.bias.data_mut()[0] = value;
    }

    /// Evaluates the head on already-computed segment inputs (each `[batch × width]`, in part order).
    pub fn combine(&self, segments: &[&Tensor]) -> Result<Tensor> {
        self.dense.forward(&Tensor::concat_cols(segments)?)
    }
}

#[derive(Debug, Clone)]
struct ForwardCache {
    batch: usize,
    branches: Vec<Vec<LayerCache>>,
    head_input: Tensor,
    head_output: Tensor,
}

/// A parameter tensor together with its stable name.
#[derive(Debug, Clone, Copy)]
pub struct NamedParam<'a> {
    pub name: &'a str,
    pub tensor: &'a Tensor,
}

/// Gradients for every trainable tensor, in [`ModelGraph::params`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Tensor>,
}

impl Gradients {
    pub fn global_norm(&self) -> f64 {
        self.tensors.iter().flat_map(|t| t.data()).map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, k: f64) {
        for t in &mut self.tensors {
            t.data_mut().iter_mut().for_each(|v| *v *= k);
        }
    }
}

/// Branches of layers joined with the coordinates at a single linear output.
#[derive(Debug, Clone)]
pub struct ModelGraph {
    spec: ArchSpec,
    seq_len: usize,
    pub branches: Vec<Branch>,
    pub head: JointHead,
    param_names: Vec<String>,
    cache: Option<ForwardCache>,
}

impl ModelGraph {
    fn assemble(spec: ArchSpec, seq_len: usize, branches: Vec<Branch>, join: Vec<JoinPart>, rng: &mut Rng) -> Result<Self> {
        if seq_len == 0 {
            return Err(Error::Construction("seq_len must be positive".into()));
        }
        let mut widths = Vec::with_capacity(branches.len());
        for branch in &branches {
            let mut shape = match branch.input {
                BranchInput::Flat => vec![seq_len],
                BranchInput::Sequence => vec![seq_len, 1],
            };
            for layer in &branch.layers {
                shape = layer
                    .output_shape(&shape)
                    .map_err(|e| Error::Construction(format!("{} branch (seq_len {seq_len}): {e}", branch.name)))?;
            }
            match shape[..] {
                [w] => widths.push(w),
                _ => {
                    return Err(Error::Construction(format!(
                        "{} branch must end in a flat vector, got per-sample shape {shape:?}",
                        branch.name
                    )))
                }
            }
        }
        let parts: Vec<(JoinPart, usize)> = join
            .into_iter()
            .map(|p| match p {
                JoinPart::Branch(i) => (p, widths[i]),
                JoinPart::Coords => (p, 2),
            })
            .collect();
        let width = parts.iter().map(|(_, w)| w).sum();
        let head = JointHead {
            dense: DenseLayer::new(width, 1, Activation::Linear, rng)?,
            parts,
        };
        let mut param_names = Vec::new();
        for branch in &branches {
            for (i, layer) in branch.layers.iter().enumerate() {
                for (p, _) in layer.params() {
                    param_names.push(format!("{}.{i}.{}.{p}", branch.name, layer.kind()));
                }
            }
        }
        param_names.push("head.weights".into());
        param_names.push("head.bias".into());
        Ok(Self {
            spec,
            seq_len,
            branches,
            head,
            param_names,
            cache: None,
        })
    }

    pub fn spec(&self) -> &ArchSpec {
        &self.spec
    }

    pub fn architecture(&self) -> Architecture {
        self.spec.architecture()
    }

    pub fn seq_len(&self) -> usize {
        self.seq_len
    }

    /// The flattened trainable set θ, each tensor exactly once.
    pub fn params(&self) -> Vec<NamedParam<'_>> {
        let tensors = self
            .branches
            .iter()
            .flat_map(|b| b.layers.iter().flat_map(|l| l.params().into_iter().map(|(_, t)| t)))
            .chain([&self.head.dense.weights, &self.head.dense.bias]);
        self.param_names.iter().zip(tensors).map(|(name, tensor)| NamedParam { name, tensor }).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out: Vec<&mut Tensor> = self
            .branches
            .iter_mut()
            .flat_map(|b| b.layers.iter_mut().flat_map(|l| l.params_mut()))
            .collect();
        out.push(&mut self.head.dense.weights);
        out.push(&mut self.head.dense.bias);
        out
    }

    pub fn param_names(&self) -> &[String] {
        &self.param_names
    }

    pub fn num_params(&self) -> usize {
        self.params().iter().map(|p| p.tensor.len()).sum()
    }

    pub fn branch(&self, name: &str) -> Option<&Branch> {
        self.branches.iter().find(|b| b.name == name)
    }

    fn check_inputs(&self, x: &Tensor, coords: &Tensor) -> Result<usize> {
        let (b, len) = x.dims2("model_forward")?;
        if len != self.seq_len {
            return Err(Error::Usage(format!("model expects sequences of length {}, got {len}", self.seq_len)));
        }
        if coords.shape() != [b, 2] {
            return Err(Error::Usage(format!("coordinates must be [{b}, 2], got {:?}", coords.shape())));
        }
        Ok(b)
    }

    fn branch_input(&self, branch: &Branch, x: &Tensor, b: usize) -> Result<Tensor> {
        match branch.input {
            BranchInput::Flat => Ok(x.clone()),
            BranchInput::Sequence => x.clone().reshape(&[b, self.seq_len, 1]),
        }
    }

    fn head_segments<'a>(&self, outputs: &'a [Tensor], coords: &'a Tensor) -> Vec<&'a Tensor> {
        self.head
            .parts
            .iter()
            .map(|(p, _)| match p {
                JoinPart::Branch(i) => &outputs[*i],
                JoinPart::Coords => coords,
            })
            .collect()
    }

    /// Forward pass that records the intermediates needed by [`ModelGraph::backward`].
    /// Returns `[batch × 1]` predictions in normalized rainfall units.
    pub fn forward(&mut self, x: &Tensor, coords: &Tensor, mode: Mode, rng: &mut Rng) -> Result<Tensor> {
        let b = self.check_inputs(x, coords)?;
        let mut outputs = Vec::with_capacity(self.branches.len());
        let mut caches = Vec::with_capacity(self.branches.len());
        for branch in &self.branches {
            let mut h = self.branch_input(branch, x, b)?;
            let mut layer_caches = Vec::with_capacity(branch.layers.len());
            for layer in &branch.layers {
                let (y, cache) = layer.forward(h, mode, rng)?;
                layer_caches.push(cache);
                h = y;
            }
            outputs.push(h);
            caches.push(layer_caches);
        }
        let head_input = Tensor::concat_cols(&self.head_segments(&outputs, coords))?;
        let y = self.head.dense.forward(&head_input)?;
        self.cache = Some(ForwardCache {
            batch: b,
            branches: caches,
            head_input,
            head_output: y.clone(),
        });
        Ok(y)
    }

    /// Inference-mode forward pass; pure in `(θ, x, coords)` and safe to share.
    pub fn predict(&self, x: &Tensor, coords: &Tensor) -> Result<Tensor> {
        let b = self.check_inputs(x, coords)?;
        let mut outputs = Vec::with_capacity(self.branches.len());
        for branch in &self.branches {
            let mut h = self.branch_input(branch, x, b)?;
            for layer in &branch.layers {
                h = layer.infer(&h)?;
            }
            outputs.push(h);
        }
        self.head.combine(&self.head_segments(&outputs, coords))
    }

    /// Gradients of `Σ grad_out ⊙ y` with respect to θ, using the most recent
    /// [`ModelGraph::forward`]. Consumes that forward's cache.
    pub fn backward(&mut self, grad_out: &Tensor) -> Result<Gradients> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| Error::Usage("backward called without a preceding forward pass".into()))?;
        if grad_out.shape() != [cache.batch, 1] {
            return Err(Error::Usage(format!("grad_out must be [{}, 1], got {:?}", cache.batch, grad_out.shape())));
        }
        let head = self.head.dense.backward_from_output(&cache.head_input, &cache.head_output, grad_out)?;
        let widths: Vec<usize> = self.head.parts.iter().map(|(_, w)| *w).collect();
        let segment_grads = head.input.split_cols(&widths)?;

        let mut tensors = Vec::with_capacity(self.param_names.len());
        for (bi, branch) in self.branches.iter().enumerate() {
            let seg = self
                .head
                .parts
                .iter()
                .position(|(p, _)| *p == JoinPart::Branch(bi))
                .expect("every branch feeds the head");
            let mut g = segment_grads[seg].clone();
            let mut per_layer = Vec::with_capacity(branch.layers.len());
            for (layer, lc) in branch.layers.iter().zip(&cache.branches[bi]).rev() {
                let (gx, gp) = layer.backward(lc, &g)?;
                per_layer.push(gp);
                g = gx;
            }
            tensors.extend(per_layer.into_iter().rev().flatten());
        }
        tensors.push(head.weights);
        tensors.push(head.bias);
        Ok(Gradients { tensors })
    }

    pub fn has_forward_cache(&self) -> bool {
        self.cache.is_some()
    }

    pub(crate) fn clear_cache(&mut self) {
        self.cache = None;
    }

    /// Copies all parameter values out, in θ order.
    pub fn snapshot(&self) -> Vec<Tensor> {
        self.params().iter().map(|p| p.tensor.clone()).collect()
    }

    pub fn restore(&mut self, values: &[Tensor]) -> Result<()> {
        let mut params = self.params_mut();
        if params.len() != values.len() {
            return Err(Error::arg(format!("snapshot has {} tensors, model has {}", values.len(), params.len())));
        }
        for (p, v) in params.iter_mut().zip(values) {
            if p.shape() != v.shape() {
                return Err(Error::dim("restore", p.shape(), v.shape()));
            }
            p.data_mut().copy_from_slice(v.data());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_count(branch: &Branch) -> usize {
        branch
            .layers
            .iter()
            .filter(|l| matches!(l, Layer::Dense(_)))
            .flat_map(|l| l.params())
            .map(|(_, t)| t.len())
            .sum()
    }

    #[test]
    fn dwrpm_published_shape() {
        let model = build_dwrpm(210, &mut Rng::new(0)).unwrap();
        let deep = model.branch("deep").unwrap();
        assert_eq!(dense_count(deep), 148_650);
        let wide = model.branch("wide").unwrap();
        let conv_out = wide.layers[0].output_shape(&[210, 1]).unwrap();
        assert_eq!(conv_out, vec![206, 100]);
        assert_eq!(wide.layers[1].output_shape(&conv_out).unwrap(), vec![100]);
        assert_eq!(model.head.input_width(), 152);
        assert_eq!(model.head.segment_weights(JoinPart::Branch(0)).unwrap().len(), 100);
        assert_eq!(model.head.segment_weights(JoinPart::Coords).unwrap().len(), 2);
        assert_eq!(model.head.segment_weights(JoinPart::Branch(1)).unwrap().len(), 50);
    }

    #[test]
    fn baseline_head_widths() {
        let mut rng = Rng::new(0);
        assert_eq!(build_mlp_baseline(210, &mut rng).unwrap().head.input_width(), 102);
        assert_eq!(build_cnn_baseline(210, &mut rng).unwrap().head.input_width(), 102);
        assert_eq!(build_lstm_baseline(210, &mut rng).unwrap().head.input_width(), 52);
    }

    #[test]
    fn mlp_hidden_widths() {
        let model = build_mlp_baseline(210, &mut Rng::new(0)).unwrap();
        let widths: Vec<usize> = model.branches[0]
            .layers
            .iter()
            .filter_map(|l| match l {
                Layer::Dense(d) => Some(d.out_features()),
                _ => None,
            })
            .collect();
        assert_eq!(widths, vec![300, 200, 100]);
    }

    #[test]
    fn cnn_length_arithmetic() {
        let model = build_cnn_baseline(210, &mut Rng::new(0)).unwrap();
        let mut shape = vec![210, 1];
        let mut lens = Vec::new();
        for layer in &model.branches[0].layers {
            shape = layer.output_shape(&shape).unwrap();
            if matches!(layer, Layer::Conv1d(c) if c.kernel_len() == 5) || matches!(layer, Layer::Pool(_)) {
                lens.push(shape[0]);
            }
        }
        assert_eq!(lens, vec![206, 202, 101, 97, 100]);
    }

    #[test]
    fn short_sequences_rejected() {
        let mut rng = Rng::new(0);
        assert!(matches!(build_dwrpm(4, &mut rng), Err(Error::Construction(_))));
        // conv 5 -> conv 5 -> pool 2 -> conv 5 needs at least 18 steps.
        assert!(build_cnn_baseline(17, &mut rng).is_err());
        assert!(build_cnn_baseline(18, &mut rng).is_ok());
        assert!(build_dwrpm(5, &mut rng).is_ok());
    }

    #[test]
    fn param_names_are_unique_and_aligned() {
        for arch in Architecture::ALL {
            let model = ArchSpec::default_for(arch).build(30, &mut Rng::new(1)).unwrap();
            let names = model.param_names();
            let unique: std::collections::HashSet<_> = names.iter().collect();
            assert_eq!(unique.len(), names.len());
            assert_eq!(model.params().len(), names.len());
            assert_eq!(model.params().len(), model.snapshot().len());
        }
    }

    #[test]
    fn architecture_names_round_trip() {
        for arch in Architecture::ALL {
            assert_eq!(arch.name().parse::<Architecture>().unwrap(), arch);
        }
        assert!("transformer".parse::<Architecture>().is_err());
    }

    #[test]
    fn backward_without_forward_is_usage_error() {
        let mut model = build_mlp_baseline(8, &mut Rng::new(0)).unwrap();
        assert!(matches!(model.backward(&Tensor::zeros(&[1, 1])), Err(Error::Usage(_))));
    }

    #[test]
    fn forward_rejects_wrong_shapes() {
        let mut model = build_mlp_baseline(8, &mut Rng::new(0)).unwrap();
        let mut rng = Rng::new(1);
        assert!(model
            .forward(&Tensor::zeros(&[2, 7]), &Tensor::zeros(&[2, 2]), Mode::Inference, &mut rng)
            .is_err());
        assert!(model
            .forward(&Tensor::zeros(&[2, 8]), &Tensor::zeros(&[3, 2]), Mode::Inference, &mut rng)
            .is_err());
    }
}
