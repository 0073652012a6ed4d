use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Min-max scaling of rainfall onto `[0, 100]`:
/// `x* = (x - x_min) / (x_max - x_min) · 100`.
///
/// Values outside the fitted range extrapolate linearly; nothing is clamped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalizer {
    x_min: f64,
    x_max: f64,
}

impl Normalizer {
    pub fn new(x_min: f64, x_max: f64) -> Result<Self> {
        if !x_min.is_finite() || !x_max.is_finite() || x_max <= x_min {
            return Err(Error::arg(format!("degenerate normalizer: x_min = {x_min}, x_max = {x_max}")));
        }
        Ok(Self { x_min, x_max })
    }

    /// Fits the range of `values`; fails on empty or constant input.
    pub fn fit(values: impl IntoIterator<Item = f64>) -> Result<Self> {
        let (lo, hi) = values
            .into_iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if lo > hi {
            return Err(Error::arg("cannot fit a normalizer on no values"));
        }
        Self::new(lo, hi)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn normalize(&self, x: f64) -> f64 {
        (x - self.x_min) / (self.x_max - self.x_min) * 100.0
    }

    pub fn denormalize(&self, x_star: f64) -> f64 {
        x_star / 100.0 * (self.x_max - self.x_min) + self.x_min
    }
}
