//! Shared inputs for the criterion benchmarks under `benches/`.

use dwrpm_core::{Rng, Tensor};

/// Deterministic `[rows × cols]` tensor with entries in `[-1, 1)`.
pub fn uniform_tensor(shape: &[usize], seed: u64) -> Tensor {
    let mut rng = Rng::new(seed);
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.uniform_range(-1.0, 1.0)).collect()).expect("shape matches data")
}

/// One model batch: normalized rainfall windows, coordinates inside the
/// Rajasthan box and a unit upstream gradient.
pub fn model_batch(batch: usize, seq_len: usize, seed: u64) -> (Tensor, Tensor, Tensor) {
    let mut rng = Rng::new(seed);
    let x = (0..batch * seq_len)
        .map(|_| if rng.uniform() < 0.7 { 0.0 } else { rng.uniform_range(0.0, 40.0) })
        .collect();
    let coords = (0..batch)
        .flat_map(|_| [rng.uniform_range(23.5, 30.2), rng.uniform_range(69.5, 78.2)])
        .collect();
    (
        Tensor::new(&[batch, seq_len], x).expect("shape matches data"),
        Tensor::new(&[batch, 2], coords).expect("shape matches data"),
        Tensor::full(&[batch, 1], 1.0),
    )
}
