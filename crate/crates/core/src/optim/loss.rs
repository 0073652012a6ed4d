use crate::tensor::Tensor;
use crate::{Error, Result};

/// Mean squared error, `(1/N) Σ (pred - target)²`.
pub fn mse(pred: &[f64], target: &[f64]) -> Result<f64> {
    if pred.len() != target.len() {
        return Err(Error::dim("mse", &[pred.len()], &[target.len()]));
    }
    if pred.is_empty() {
        return Err(Error::arg("mse of zero samples"));
    }
    Ok(pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / pred.len() as f64)
}

/// Loss value and its gradient with respect to `pred`.
pub fn mse_with_grad(pred: &Tensor, target: &Tensor) -> Result<(f64, Tensor)> {
    if pred.shape() != target.shape() {
        return Err(Error::dim("mse", pred.shape(), target.shape()));
    }
    let loss = mse(pred.data(), target.data())?;
    let n = pred.len() as f64;
    let grad = pred.zip_map(target, "mse", |p, t| 2.0 * (p - t) / n)?;
    Ok((loss, grad))
}
