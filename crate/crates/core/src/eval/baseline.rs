//! Naive reference forecasters.

use chrono::Datelike;

use crate::data::{Split, WindowedDataset};
use crate::{Error, Result};

/// Predicts no rain every day.
pub fn zero_forecast(rows: &[usize]) -> Vec<f64> {
    vec![0.0; rows.len()]
}

/// Day-of-year mean rainfall over the training split.
#[derive(Debug, Clone, PartialEq)]
pub struct Climatology {
    /// Indexed by ordinal day, 1..=366; index 0 is unused.
    by_day: Vec<f64>,
}

impl Climatology {
    /// Fits on the training-split targets of `data`. Days of year never seen
    /// in training fall back to the overall training mean.
    pub fn fit(data: &WindowedDataset) -> Result<Self> {
        let rows = data.indices(Split::Train);
        if rows.is_empty() {
            return Err(Error::arg("climatology needs a non-empty training split"));
        }
        let mut sums = vec![0.0; 367];
        let mut counts = vec![0usize; 367];
        let mut total = 0.0;
        for &i in &rows {
            let d = data.row(i).target_date.ordinal() as usize;
            let mm = data.target_mm(i);
            sums[d] += mm;
            counts[d] += 1;
            total += mm;
        }
        let fallback = total / rows.len() as f64;
        let by_day = sums.iter().zip(&counts).map(|(s, &c)| if c > 0 { s / c as f64 } else { fallback }).collect();
        Ok(Self { by_day })
    }

    pub fn for_ordinal(&self, ordinal: u32) -> f64 {
        self.by_day[ordinal as usize]
    }

    pub fn forecast(&self, data: &WindowedDataset, rows: &[usize]) -> Vec<f64> {
        rows.iter().map(|&i| self.for_ordinal(data.row(i).target_date.ordinal())).collect()
    }
}
