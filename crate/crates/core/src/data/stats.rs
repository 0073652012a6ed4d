use chrono::{Datelike, NaiveDate};
use serde::Serialize;

use crate::data::RainSeries;
use crate::{Error, Result};

/// Calendar-month summary of daily rainfall, mm. `None` statistics mean the
/// month had no observed days.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonthStats {
    pub month: u32,
    pub min: Option<f64>,
    pub max: Option<f64>,
    pub mean: Option<f64>,
    pub observed_days: usize,
    pub missing_days: usize,
}

impl MonthStats {
    pub fn is_empty(&self) -> bool {
        self.observed_days == 0
    }
}

/// Per-month minimum, maximum and mean for one calendar year. Missing days,
/// and days outside the series, are left out of the mean and counted.
pub fn monthly_stats(series: &RainSeries, year: i32) -> Result<Vec<MonthStats>> {
    let covers = series.end().is_some_and(|end| series.start.year() <= year && end.year() >= year);
    if !covers {
        return Err(Error::arg(format!("series for {} does not cover {year}", series.station_id)));
    }
    (1..=12)
        .map(|month| {
            let first = NaiveDate::from_ymd_opt(year, month, 1).ok_or_else(|| Error::arg(format!("invalid year {year}")))?;
            let values: Vec<Option<f64>> = first.iter_days().take_while(|d| d.month() == month).map(|d| series.get(d)).collect();
            let observed: Vec<f64> = values.iter().flatten().copied().collect();
            let n = observed.len();
            Ok(MonthStats {
                month,
                min: observed.iter().copied().reduce(f64::min),
                max: observed.iter().copied().reduce(f64::max),
                mean: (n > 0).then(|| observed.iter().sum::<f64>() / n as f64),
                observed_days: n,
                missing_days: values.len() - n,
            })
        })
        .collect()
}
