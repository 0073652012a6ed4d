//! Sliding windows over station series and the chronological split.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Normalizer, RainSeries, Station};
use crate::tensor::Tensor;
use crate::{Error, Result};

pub const DEFAULT_SEQ_LEN: usize = 210;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    fn code(self) -> u8 {
        match self {
            Split::Train => 0,
            Split::Val => 1,
            Split::Test => 2,
        }
    }

    fn from_code(c: u8) -> Option<Self> {
        Split::ALL.into_iter().find(|s| s.code() == c)
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "val" | "validation" => Ok(Split::Val),
            "test" => Ok(Split::Test),
            _ => Err(Error::arg(format!("unknown split {s:?} (expected train, val or test)"))),
        }
    }
}

/// Inclusive year ranges for each split, keyed on the target date.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitYears {
    pub train: (i32, i32),
    pub val: (i32, i32),
    pub test: (i32, i32),
}

impl Default for SplitYears {
    fn default() -> Self {
        Self {
            train: (1957, 2006),
            val: (2007, 2014),
            test: (2015, 2017),
        }
    }
}

impl SplitYears {
    pub fn new(train: (i32, i32), val: (i32, i32), test: (i32, i32)) -> Result<Self> {
        let years = Self { train, val, test };
        let ranges = [train, val, test];
        if ranges.iter().any(|(a, b)| a > b) {
            return Err(Error::arg(format!("split year ranges must be ordered: {years:?}")));
        }
        if train.1 >= val.0 || val.1 >= test.0 {
            return Err(Error::arg(format!("split year ranges must be chronological and disjoint: {years:?}")));
        }
        Ok(years)
    }

    pub fn assign(&self, date: NaiveDate) -> Option<Split> {
        let y = date.year();
        let within = |(a, b): (i32, i32)| (a..=b).contains(&y);
        if within(self.train) {
            Some(Split::Train)
        } else if within(self.val) {
            Some(Split::Val)
        } else if within(self.test) {
            Some(Split::Test)
        } else {
            None
        }
    }
}

/// One training example: `seq_len` normalized days followed by the normalized target day.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowRow {
    pub station_id: String,
    pub target_date: NaiveDate,
    /// `(latitude, longitude)` in degrees.
    pub coords: [f64; 2],
    pub sequence: Vec<f64>,
    pub target: f64,
}

/// Emits one row per day `t` whose `seq_len + 1` days ending at `t` are all
/// present. Windows touching a missing day are skipped.
pub fn make_windows(series: &RainSeries, station: &Station, seq_len: usize, normalizer: &Normalizer) -> Vec<WindowRow> {
    complete_window_ends(series, seq_len)
        .map(|t| WindowRow {
            station_id: station.id.clone(),
            target_date: series.date_at(t),
            coords: station.coords(),
            sequence: series.values[t - seq_len..t]
                .iter()
                .map(|v| normalizer.normalize(v.expect("complete window")))
                .collect(),
            target: normalizer.normalize(series.values[t].expect("complete window")),
        })
        .collect()
}

fn complete_window_ends(series: &RainSeries, seq_len: usize) -> impl Iterator<Item = usize> + '_ {
    let mut run = 0usize;
    series.values.iter().enumerate().filter_map(move |(t, v)| {
        run = if v.is_some() { run + 1 } else { 0 };
        (run > seq_len).then_some(t)
    })
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SplitPartition {
    pub train: Vec<WindowRow>,
    pub val: Vec<WindowRow>,
    pub test: Vec<WindowRow>,
    /// Rows whose target year is in no range.
    pub excluded: usize,
}

pub fn split_by_year(rows: Vec<WindowRow>, years: &SplitYears) -> SplitPartition {
    let mut out = SplitPartition::default();
    for row in rows {
        match years.assign(row.target_date) {
            Some(Split::Train) => out.train.push(row),
            Some(Split::Val) => out.val.push(row),
            Some(Split::Test) => out.test.push(row),
            None => out.excluded += 1,
        }
    }
    if out.excluded > 0 {
        log::warn!("{} windows fall outside every split year range and were excluded", out.excluded);
    }
    out
}

/// Fits the normalizer on every observed day inside the training years, across all stations.
pub fn fit_train_normalizer(series: &[RainSeries], years: &SplitYears) -> Result<Normalizer> {
    let (lo, hi) = years.train;
    Normalizer::fit(
        series
            .iter()
            .flat_map(|s| s.iter_dated())
            .filter(|(d, _)| (lo..=hi).contains(&d.year()))
            .filter_map(|(_, v)| v),
    )
    .map_err(|e| Error::arg(format!("cannot fit normalizer on the training years {lo}-{hi}: {e}")))
}

/// All windows of a station network, stored compactly and labelled by split.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedDataset {
    seq_len: usize,
    normalizer: Normalizer,
    years: SplitYears,
    stations: Vec<Station>,
    station_idx: Vec<u32>,
    dates: Vec<NaiveDate>,
    splits: Vec<Split>,
    targets: Vec<f64>,
    sequences: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct WindowCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
    pub excluded: usize,
}

/// A borrowed view of one dataset row.
#[derive(Debug, Clone, Copy)]
pub struct RowRef<'a> {
    pub station: &'a Station,
    pub target_date: NaiveDate,
    pub split: Split,
    pub sequence: &'a [f64],
    pub target: f64,
}

/// Column views of a dataset: station index, target date, split, target and flattened sequences.
pub(crate) type RawColumns<'a> = (&'a [u32], &'a [NaiveDate], &'a [Split], &'a [f64], &'a [f64]);

/// Batched model inputs.
#[derive(Debug, Clone)]
pub struct Batch {
    /// `[batch × seq_len]`
    pub x: Tensor,
    /// `[batch × 2]`
    pub coords: Tensor,
    /// `[batch × 1]`
    pub targets: Tensor,
}

impl WindowedDataset {
    /// Normalizes on the training years, windows every station and labels rows by split.
    pub fn build(series: &[RainSeries], stations: &[Station], seq_len: usize, years: SplitYears) -> Result<(Self, WindowCounts)> {
        let normalizer = fit_train_normalizer(series, &years)?;
        Self::build_with(series, stations, seq_len, years, normalizer)
    }

    /// Windowing with an externally supplied normalizer.
    pub fn build_with(series: &[RainSeries], stations: &[Station], seq_len: usize, years: SplitYears, normalizer: Normalizer) -> Result<(Self, WindowCounts)> {
        if seq_len == 0 {
            return Err(Error::arg("seq_len must be positive"));
        }
        let mut stations = stations.to_vec();
        stations.sort_by(|a, b| a.id.cmp(&b.id));
        let by_id: HashMap<&str, usize> = stations.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
        let mut ordered: Vec<(usize, &RainSeries)> = Vec::with_capacity(series.len());
        for s in series {
            let idx = *by_id
                .get(s.station_id.as_str())
                .ok_or_else(|| Error::arg(format!("series for unknown station {:?}", s.station_id)))?;
            ordered.push((idx, s));
        }
        ordered.sort_by_key(|(i, _)| *i);

        let per_station: Vec<(usize, Vec<WindowRow>)> = ordered
            .par_iter()
            .map(|&(idx, s)| (idx, make_windows(s, &stations[idx], seq_len, &normalizer)))
            .collect();

        let mut ds = Self {
            seq_len,
            normalizer,
            years,
            stations,
            station_idx: Vec::new(),
            dates: Vec::new(),
            splits: Vec::new(),
            targets: Vec::new(),
            sequences: Vec::new(),
        };
        let mut counts = WindowCounts::default();
        for (idx, rows) in per_station {
            for row in rows {
                let Some(split) = years.assign(row.target_date) else {
                    counts.excluded += 1;
                    continue;
                };
                match split {
                    Split::Train => counts.train += 1,
                    Split::Val => counts.val += 1,
                    Split::Test => counts.test += 1,
                }
                ds.push(idx as u32, row.target_date, split, row.target, &row.sequence);
            }
        }
        if counts.excluded > 0 {
            log::warn!("{} windows fall outside every split year range and were excluded", counts.excluded);
        }
        Ok((ds, counts))
    }

    fn push(&mut self, station: u32, date: NaiveDate, split: Split, target: f64, sequence: &[f64]) {
        self.station_idx.push(station);
        self.dates.push(date);
        self.splits.push(split);
        self.targets.push(target);
        self.sequences.extend_from_slice(sequence);
    }

    pub fn seq_len(&self) -> usize {
        self.seq_len
    }

    pub fn normalizer(&self) -> &Normalizer {
        &self.normalizer
    }

    pub fn split_years(&self) -> &SplitYears {
        &self.years
    }

    pub fn stations(&self) -> &[Station] {
        &self.stations
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn row(&self, i: usize) -> RowRef<'_> {
        RowRef {
            station: &self.stations[self.station_idx[i] as usize],
            target_date: self.dates[i],
            split: self.splits[i],
            sequence: &self.sequences[i * self.seq_len..(i + 1) * self.seq_len],
            target: self.targets[i],
        }
    }

    /// Row indices of one split, in storage order.
    pub fn indices(&self, split: Split) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.splits[i] == split).collect()
    }

    pub fn count(&self, split: Split) -> usize {
        self.splits.iter().filter(|&&s| s == split).count()
    }

    /// Target rainfall of row `i`, mm.
    pub fn target_mm(&self, i: usize) -> f64 {
        self.normalizer.denormalize(self.targets[i])
    }

    pub fn batch(&self, rows: &[usize]) -> Result<Batch> {
        if rows.is_empty() {
            return Err(Error::arg("empty batch"));
        }
        let mut x = Vec::with_capacity(rows.len() * self.seq_len);
        let mut coords = Vec::with_capacity(rows.len() * 2);
        let mut targets = Vec::with_capacity(rows.len());
        for &i in rows {
            let r = self.row(i);
            x.extend_from_slice(r.sequence);
            coords.extend_from_slice(&r.station.coords());
            targets.push(r.target);
        }
        Ok(Batch {
            x: Tensor::new(&[rows.len(), self.seq_len], x)?,
            coords: Tensor::new(&[rows.len(), 2], coords)?,
            targets: Tensor::new(&[rows.len(), 1], targets)?,
        })
    }

    pub(crate) fn raw_parts(&self) -> RawColumns<'_> {
        (&self.station_idx, &self.dates, &self.splits, &self.targets, &self.sequences)
    }

    pub(crate) fn split_code(s: Split) -> u8 {
        s.code()
    }

    pub(crate) fn split_from_code(c: u8) -> Option<Split> {
        Split::from_code(c)
    }

    #[allow(clippy::too_many_arguments)]
    pub(crate) fn from_raw_parts(
        seq_len: usize,
        normalizer: Normalizer,
        years: SplitYears,
        stations: Vec<Station>,
        station_idx: Vec<u32>,
        dates: Vec<NaiveDate>,
        splits: Vec<Split>,
        targets: Vec<f64>,
        sequences: Vec<f64>,
    ) -> Result<Self> {
        let n = targets.len();
        if station_idx.len() != n || dates.len() != n || splits.len() != n || sequences.len() != n * seq_len {
            return Err(Error::format("dataset", "column lengths disagree"));
        }
        if station_idx.iter().any(|&i| i as usize >= stations.len()) {
            return Err(Error::format("dataset", "row references an unknown station"));
        }
        Ok(Self {
            seq_len,
            normalizer,
            years,
            stations,
            station_idx,
            dates,
            splits,
            targets,
            sequences,
        })
    }
}
