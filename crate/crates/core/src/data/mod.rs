//! Gauge records in, windowed and normalized datasets out.

mod cache;
mod imd;
mod ingest;
mod normalize;
mod series;
pub(crate) mod station;
mod stats;
mod synth;
mod window;

pub use imd::{categorize, ImdCategory};
pub use ingest::{
    ingest, ingest_records, read_stations, write_records, write_stations, CleaningReport, IngestOptions, Ingested, RowIssue, StationCensus, RECORDS_HEADER,
    STATIONS_HEADER,
};
pub use normalize::Normalizer;
pub use series::RainSeries;
pub use station::{Station, Zone, LAT_RANGE, LON_RANGE};
pub use stats::{monthly_stats, MonthStats};
pub use synth::{synth_generate, SynthConfig, SynthData};
pub use window::{
    fit_train_normalizer, make_windows, split_by_year, Batch, RowRef, Split, SplitPartition, SplitYears, WindowCounts, WindowRow, WindowedDataset,
    DEFAULT_SEQ_LEN,
};
