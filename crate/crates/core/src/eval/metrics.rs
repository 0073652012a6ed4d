//! Point-forecast error metrics in millimetres.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Mean absolute error and root mean square error over `n` paired samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricPair {
    pub mae: f64,
    pub rmse: f64,
    pub n: usize,
}

fn check_pairs(pred: &[f64], actual: &[f64]) -> Result<()> {
    if pred.len() != actual.len() {
        return Err(Error::arg(format!("{} predictions for {} observations", pred.len(), actual.len())));
    }
    if pred.is_empty() {
        return Err(Error::arg("metrics need at least one sample"));
    }
    Ok(())
}

/// `(1/N) Σ |p − a|`
pub fn mae(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check_pairs(pred, actual)?;
    Ok(pred.iter().zip(actual).map(|(p, a)| (p - a).abs()).sum::<f64>() / pred.len() as f64)
}

/// `sqrt((1/N) Σ (p − a)²)`
pub fn rmse(pred: &[f64], actual: &[f64]) -> Result<f64> {
    check_pairs(pred, actual)?;
    Ok((pred.iter().zip(actual).map(|(p, a)| (p - a).powi(2)).sum::<f64>() / pred.len() as f64).sqrt())
}

pub fn metric_pair(pred: &[f64], actual: &[f64]) -> Result<MetricPair> {
    let mut acc = MetricAccumulator::default();
    check_pairs(pred, actual)?;
    for (p, a) in pred.iter().zip(actual) {
        acc.push(*p, *a);
    }
    Ok(acc.finish().expect("non-empty"))
}

/// Running sums from which MAE and RMSE of any sample subset can be merged.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MetricAccumulator {
    n: usize,
    abs_sum: f64,
    sq_sum: f64,
}

impl MetricAccumulator {
    pub fn push(&mut self, pred: f64, actual: f64) {
        let e = pred - actual;
        self.n += 1;
        self.abs_sum += e.abs();
        self.sq_sum += e * e;
    }

    pub fn merge(&mut self, other: &MetricAccumulator) {
        self.n += other.n;
        self.abs_sum += other.abs_sum;
        self.sq_sum += other.sq_sum;
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `None` when no samples were pushed.
    pub fn finish(&self) -> Option<MetricPair> {
        (self.n > 0).then(|| {
            let n = self.n as f64;
            MetricPair {
                mae: self.abs_sum / n,
                rmse: (self.sq_sum / n).sqrt(),
                n: self.n,
            }
        })
    }
}

/// Sample-weighted combination of disjoint subset metrics: MAE averages
/// linearly, RMSE averages in the squared domain.
pub fn aggregate<'a>(parts: impl IntoIterator<Item = &'a MetricPair>) -> Option<MetricPair> {
    let (mut n, mut abs_sum, mut sq_sum) = (0usize, 0.0, 0.0);
    for p in parts {
        n += p.n;
        abs_sum += p.mae * p.n as f64;
        sq_sum += p.rmse * p.rmse * p.n as f64;
    }
    (n > 0).then(|| MetricPair {
        mae: abs_sum / n as f64,
        rmse: (sq_sum / n as f64).sqrt(),
        n,
    })
}
