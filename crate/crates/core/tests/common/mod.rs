//! Helpers shared by the integration test targets.

#![allow(dead_code)]

use dwrpm_core::layers::{Activation, Conv1dLayer, DenseLayer, LstmLayer, Mode, PoolLayer};
use dwrpm_core::models::{ArchSpec, ModelGraph};
use dwrpm_core::rng::Rng;
use dwrpm_core::Tensor;

pub const FD_STEP: f64 = 1e-5;
pub const GRAD_TOL: f64 = 1e-4;
/// Below this absolute difference a gradient entry is treated as exact.
const ABS_FLOOR: f64 = 1e-8;

/// Relative error of an analytic gradient entry against its numerical estimate.
pub fn rel_err(analytic: f64, numeric: f64) -> f64 {
    let diff = (analytic - numeric).abs();
    if diff < ABS_FLOOR {
        0.0
    } else {
        diff / analytic.abs().max(numeric.abs())
    }
}

/// The miniature versions of the four architectures used in gradient checks.
pub fn mini_specs() -> Vec<ArchSpec> {
    vec![
        ArchSpec::Dwrpm {
            deep_widths: vec![8, 6, 5, 4],
            dropout: 0.0,
            filters: 6,
            kernel_len: 3,
        },
        ArchSpec::Mlp {
            hidden: vec![8, 6, 4],
            dropout: 0.0,
        },
        ArchSpec::Cnn {
            filters: 4,
            kernel_len: 2,
            pool_window: 2,
            dropout: 0.0,
        },
        ArchSpec::Lstm { hidden: 5, dropout: 0.0 },
    ]
}

pub fn random_tensor(shape: &[usize], lo: f64, hi: f64, rng: &mut Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.uniform_range(lo, hi)).collect()).unwrap()
}

/// Model inputs in realistic ranges: rainfall in normalized units and raw
/// coordinate degrees.
pub fn model_inputs(batch: usize, seq_len: usize, rng: &mut Rng) -> (Tensor, Tensor) {
    let x = random_tensor(&[batch, seq_len], 0.0, 3.0, rng);
    let mut coords = Vec::with_capacity(batch * 2);
    for _ in 0..batch {
        coords.push(rng.uniform_range(23.2, 29.92));
        coords.push(rng.uniform_range(70.5, 77.58));
    }
    (x, Tensor::new(&[batch, 2], coords).unwrap())
}

fn weighted_output(y: &Tensor, w: &Tensor) -> f64 {
    y.data().iter().zip(w.data()).map(|(a, b)| a * b).sum()
}

#[derive(Debug)]
pub struct GradReport {
    pub checked: usize,
    pub worst: f64,
    pub worst_param: String,
    /// Largest absolute analytic-minus-numeric difference.
    pub worst_abs: f64,
}

/// Compares every parameter gradient of `model` on `L = Σ w ⊙ y` against
/// central differences.
pub fn check_model(model: &mut ModelGraph, x: &Tensor, coords: &Tensor, rng: &mut Rng) -> GradReport {
    let batch = x.shape()[0];
    let w = random_tensor(&[batch, 1], -1.0, 1.0, rng);
    model.forward(x, coords, Mode::Train, &mut Rng::new(0)).unwrap();
    let grads = model.backward(&w).unwrap();
    let names = model.param_names().to_vec();
    let mut report = GradReport {
        checked: 0,
        worst: 0.0,
        worst_param: String::new(),
        worst_abs: 0.0,
    };
    for (pi, name) in names.iter().enumerate() {
        let n = grads.tensors[pi].len();
        for j in 0..n {
            let original = model.params_mut()[pi].data()[j];
            model.params_mut()[pi].data_mut()[j] = original + FD_STEP;
            let up = weighted_output(&model.predict(x, coords).unwrap(), &w);
            model.params_mut()[pi].data_mut()[j] = original - FD_STEP;
            let down = weighted_output(&model.predict(x, coords).unwrap(), &w);
            model.params_mut()[pi].data_mut()[j] = original;
            let numeric = (up - down) / (2.0 * FD_STEP);
            let analytic = grads.tensors[pi].data()[j];
            let e = rel_err(analytic, numeric);
            report.checked += 1;
            report.worst_abs = report.worst_abs.max((analytic - numeric).abs());
            if e > report.worst {
                report.worst = e;
                report.worst_param = format!("{name}[{j}]");
            }
        }
    }
    report
}

/// Moves every bias off its zero initialization. With zero biases a ReLU
/// unit whose inputs are all zero sits exactly on the kink, where a central
/// difference sees half a slope and the analytic derivative sees none.
pub fn jitter_biases(model: &mut ModelGraph, rng: &mut Rng) {
    let names = model.param_names().to_vec();
    for (name, t) in names.iter().zip(model.params_mut()) {
        if name.ends_with("bias") {
            t.data_mut().iter_mut().for_each(|v| *v += rng.uniform_range(-0.1, 0.1));
        }
    }
}

/// Gradient check of one miniature architecture at `seq_len`.
pub fn check_mini(spec: &ArchSpec, seq_len: usize, seed: u64) -> GradReport {
    let mut rng = Rng::new(seed);
    let mut model = spec.build(seq_len, &mut rng).unwrap();
    jitter_biases(&mut model, &mut rng);
    let (x, coords) = model_inputs(3, seq_len, &mut rng);
    check_model(&mut model, &x, &coords, &mut rng)
}

/// Numerical gradient of `Σ w ⊙ f(t)` with respect to every entry of `t`.
pub fn numeric_grad(t: &Tensor, w: &Tensor, f: impl Fn(&Tensor) -> Tensor) -> Vec<f64> {
    (0..t.len())
        .map(|j| {
            let mut up = t.clone();
            up.data_mut()[j] += FD_STEP;
            let mut down = t.clone();
            down.data_mut()[j] -= FD_STEP;
            (weighted_output(&f(&up), w) - weighted_output(&f(&down), w)) / (2.0 * FD_STEP)
        })
        .collect()
}

pub fn worst(analytic: &Tensor, numeric: &[f64]) -> f64 {
    analytic.data().iter().zip(numeric).map(|(a, n)| rel_err(*a, *n)).fold(0.0, f64::max)
}

/// Worst relative error over inputs and parameters of every layer type.
pub fn check_layers(seed: u64) -> Vec<(&'static str, f64)> {
    let mut rng = Rng::new(seed);
    let mut out = Vec::new();

    for (label, act) in [("dense relu", Activation::Relu), ("dense linear", Activation::Linear)] {
        let layer = DenseLayer::new(5, 4, act, &mut rng).unwrap();
        let x = random_tensor(&[3, 5], -1.0, 1.0, &mut rng);
        let w = random_tensor(&[3, 4], -1.0, 1.0, &mut rng);
        let g = layer.backward(&x, &w).unwrap();
        let mut e = worst(&g.input, &numeric_grad(&x, &w, |t| layer.forward(t).unwrap()));
        e = e.max(worst(
            &g.weights,
            &numeric_grad(&layer.weights, &w, |t| {
                DenseLayer::from_parts(t.clone(), layer.bias.clone(), act).unwrap().forward(&x).unwrap()
            }),
        ));
        e = e.max(worst(
            &g.bias,
            &numeric_grad(&layer.bias, &w, |t| {
                DenseLayer::from_parts(layer.weights.clone(), t.clone(), act).unwrap().forward(&x).unwrap()
            }),
        ));
        out.push((label, e));
    }

    for (label, act, c_in) in [("conv1d linear", Activation::Linear, 1), ("conv1d relu multi-channel", Activation::Relu, 3)] {
        let layer = Conv1dLayer::new(4, c_in, 3, act, &mut rng).unwrap();
        let x = random_tensor(&[2, 9, c_in], -1.0, 1.0, &mut rng);
        let w = random_tensor(&[2, 7, 4], -1.0, 1.0, &mut rng);
        let g = layer.backward(&x, &w).unwrap();
        let mut e = worst(&g.input, &numeric_grad(&x, &w, |t| layer.forward(t).unwrap()));
        e = e.max(worst(
            &g.kernels,
            &numeric_grad(&layer.kernels, &w, |t| {
                Conv1dLayer::from_parts(t.clone(), layer.bias.clone(), act).unwrap().forward(&x).unwrap()
            }),
        ));
        e = e.max(worst(
            &g.bias,
            &numeric_grad(&layer.bias, &w, |t| {
                Conv1dLayer::from_parts(layer.kernels.clone(), t.clone(), act).unwrap().forward(&x).unwrap()
            }),
        ));
        out.push((label, e));
    }

    for (label, pool, out_len) in [
        ("global average pool", PoolLayer::global_average(), None),
        ("max pool", PoolLayer::max(2).unwrap(), Some(4)),
    ] {
        let x = random_tensor(&[2, 8, 3], -1.0, 1.0, &mut rng);
        let w = match out_len {
            Some(l) => random_tensor(&[2, l, 3], -1.0, 1.0, &mut rng),
            None => random_tensor(&[2, 3], -1.0, 1.0, &mut rng),
        };
        let g = pool.backward(&x, &w).unwrap();
        out.push((label, worst(&g, &numeric_grad(&x, &w, |t| pool.forward(t).unwrap()))));
    }

    for (label, seqs) in [("lstm sequence output", true), ("lstm last output", false)] {
        let layer = LstmLayer::new(2, 3, seqs, &mut rng).unwrap();
        let x = random_tensor(&[2, 6, 2], -1.0, 1.0, &mut rng);
        let w = if seqs {
            random_tensor(&[2, 6, 3], -1.0, 1.0, &mut rng)
        } else {
            random_tensor(&[2, 3], -1.0, 1.0, &mut rng)
        };
        let (_, cache) = layer.forward(&x).unwrap();
        let g = layer.backward(&cache, &w).unwrap();
        let rebuild = |wi: &Tensor, wh: &Tensor, b: &Tensor| {
            let mut l = layer.clone();
            l.cell.w_input = wi.clone();
            l.cell.w_hidden = wh.clone();
            l.cell.bias = b.clone();
            l
        };
        let c = &layer.cell;
        let mut e = worst(&g.input, &numeric_grad(&x, &w, |t| layer.forward(t).unwrap().0));
        e = e.max(worst(
            &g.w_input,
            &numeric_grad(&c.w_input, &w, |t| rebuild(t, &c.w_hidden, &c.bias).forward(&x).unwrap().0),
        ));
        e = e.max(worst(
            &g.w_hidden,
            &numeric_grad(&c.w_hidden, &w, |t| rebuild(&c.w_input, t, &c.bias).forward(&x).unwrap().0),
        ));
        e = e.max(worst(
            &g.bias,
            &numeric_grad(&c.bias, &w, |t| rebuild(&c.w_input, &c.w_hidden, t).forward(&x).unwrap().0),
        ));
        out.push((label, e));
    }
    out
}
