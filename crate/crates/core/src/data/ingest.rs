//! Reading gauge records and station metadata from delimited text.
//!
//! Records: `station_id,date,rainfall_mm` with ISO dates. A non-numeric
//! rainfall cell becomes a missing day; negative values, unparseable dates,
//! unknown stations and malformed rows are skipped and reported. Duplicate
//! `(station, date)` rows keep the last value.
//!
//! Stations: `station_id,name,district,zone,latitude,longitude`. Any bad
//! station row is fatal, since every record depends on it.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::Serialize;

use crate::data::{RainSeries, Station};
use crate::{Error, Result};

pub const RECORDS_HEADER: [&str; 3] = ["station_id", "date", "rainfall_mm"];
pub const STATIONS_HEADER: [&str; 6] = ["station_id", "name", "district", "zone", "latitude", "longitude"];

#[derive(Debug, Clone, Copy, Default)]
pub struct IngestOptions {
    /// Accept station coordinates outside the Rajasthan bounding box.
    pub relax_bounds: bool,
}

/// A row-addressed note from cleaning. `line` is 1-based and counts the header.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowIssue {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationCensus {
    pub station_id: String,
    pub first_date: Option<NaiveDate>,
    pub last_date: Option<NaiveDate>,
    pub days: usize,
    pub missing_days: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CleaningReport {
    pub rows_read: u64,
    /// Rows dropped entirely.
    pub skipped: Vec<RowIssue>,
    /// Rows kept as a missing day because the rainfall cell was not a number.
    pub missing_cells: Vec<RowIssue>,
    /// Rows that overwrote an earlier row for the same station and date.
    pub duplicates: Vec<RowIssue>,
    pub census: Vec<StationCensus>,
}

impl CleaningReport {
    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str("cleaning report\n");
        out.push_str(&format!("rows read:      {}\n", self.rows_read));
        out.push_str(&format!("rows skipped:   {}\n", self.skipped.len()));
        out.push_str(&format!("missing cells:  {}\n", self.missing_cells.len()));
        out.push_str(&format!("duplicates:     {}\n", self.duplicates.len()));
        for (title, issues) in [
            ("skipped rows", &self.skipped),
            ("missing cells", &self.missing_cells),
            ("duplicates", &self.duplicates),
        ] {
            if issues.is_empty() {
                continue;
            }
            out.push_str(&format!("\n{title}:\n"));
            for issue in issues {
                out.push_str(&format!("  line {}: {}\n", issue.line, issue.reason));
            }
        }
        out.push_str("\nstation census:\n");
        out.push_str(&format!("  {:<16} {:>10} {:>10} {:>7} {:>8}\n", "station", "first", "last", "days", "missing"));
        for c in &self.census {
            let fmt_date = |d: Option<NaiveDate>| d.map_or_else(|| "-".to_string(), |d| d.to_string());
            out.push_str(&format!(
                "  {:<16} {:>10} {:>10} {:>7} {:>8}\n",
                c.station_id,
                fmt_date(c.first_date),
                fmt_date(c.last_date),
                c.days,
                c.missing_days
            ));
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Ingested {
    pub stations: Vec<Station>,
    /// One series per station that has records, ordered by station id.
    pub series: Vec<RainSeries>,
    pub report: CleaningReport,
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::io(path, e))
}

pub fn ingest(records: &Path, stations: &Path, opts: IngestOptions) -> Result<Ingested> {
    let stations = read_stations(open(stations)?, opts)?;
    ingest_records(open(records)?, stations)
}

fn check_header(what: &str, found: &csv::StringRecord, expected: &[&str]) -> Result<()> {
    let got: Vec<&str> = found.iter().map(str::trim).collect();
    if got != expected {
        return Err(Error::format(what, format!("expected header {}, found {}", expected.join(","), got.join(","))));
    }
    Ok(())
}

pub fn read_stations(reader: impl Read, opts: IngestOptions) -> Result<Vec<Station>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    check_header("stations file", rdr.headers()?, &STATIONS_HEADER)?;
    let mut out: Vec<Station> = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |detail: String| Error::format("stations file", format!("line {line}: {detail}"));
        if rec.len() != STATIONS_HEADER.len() {
            return Err(bad(format!("expected {} fields, found {}", STATIONS_HEADER.len(), rec.len())));
        }
        let coord = |i: usize| {
            rec[i]
                .trim()
                .parse::<f64>()
                .map_err(|_| bad(format!("{} {:?} is not a number", STATIONS_HEADER[i], &rec[i])))
        };
        let station = Station {
            id: rec[0].trim().to_string(),
            name: rec[1].trim().to_string(),
            district: rec[2].trim().to_string(),
            zone: rec[3].parse().map_err(|e: Error| bad(e.to_string()))?,
            latitude: coord(4)?,
            longitude: coord(5)?,
        };
        if station.id.is_empty() {
            return Err(bad("empty station id".into()));
        }
        if out.iter().any(|s| s.id == station.id) {
            return Err(bad(format!("duplicate station id {:?}", station.id)));
        }
        station.validate(opts.relax_bounds).map_err(|e| bad(e.to_string()))?;
        out.push(station);
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}

pub fn ingest_records(reader: impl Read, stations: Vec<Station>) -> Result<Ingested> {
    let known: HashMap<&str, usize> = stations.iter().enumerate().map(|(i, s)| (s.id.as_str(), i)).collect();
    let mut days: Vec<BTreeMap<NaiveDate, Option<f64>>> = vec![BTreeMap::new(); stations.len()];
    let mut report = CleaningReport::default();

    let mut rdr = csv::ReaderBuilder::new().flexible(true).from_reader(reader);
    check_header("records file", rdr.headers()?, &RECORDS_HEADER)?;
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        report.rows_read += 1;
        let mut skip = |reason: String| report.skipped.push(RowIssue { line, reason });
        if rec.len() != RECORDS_HEADER.len() {
            skip(format!("expected {} fields, found {}", RECORDS_HEADER.len(), rec.len()));
            continue;
        }
        let id = rec[0].trim();
        let Some(&station) = known.get(id) else {
            skip(format!("unknown station id {id:?}"));
            continue;
        };
        let Ok(date) = NaiveDate::parse_from_str(rec[1].trim(), "%Y-%m-%d") else {
            skip(format!("unparseable date {:?}", &rec[1]));
            continue;
        };
        let cell = rec[2].trim();
        let value = match cell.parse::<f64>() {
            Ok(v) if v.is_finite() && v >= 0.0 => Some(v),
            Ok(v) if v.is_finite() => {
                skip(format!("negative rainfall {v}"));
                continue;
            }
            _ => {
                report.missing_cells.push(RowIssue {
                    line,
                    reason: format!("non-numeric rainfall {cell:?} treated as missing"),
                });
                None
            }
        };
        if days[station].insert(date, value).is_some() {
            log::warn!("records line {line}: duplicate row for {id} on {date}; keeping the later value");
            report.duplicates.push(RowIssue {
                line,
                reason: format!("duplicate {id} {date}; later value kept"),
            });
        }
    }

    let mut series = Vec::new();
    for (station, map) in stations.iter().zip(days) {
        let (Some((&first, _)), Some((&last, _))) = (map.first_key_value(), map.last_key_value()) else {
            report.census.push(StationCensus {
                station_id: station.id.clone(),
                first_date: None,
                last_date: None,
                days: 0,
                missing_days: 0,
            });
            continue;
        };
        let n = (last - first).num_days() as usize + 1;
        let mut values = vec![None; n];
        for (date, v) in map {
            values[(date - first).num_days() as usize] = v;
        }
        let s = RainSeries::new(station.id.clone(), first, values);
        report.census.push(StationCensus {
            station_id: station.id.clone(),
            first_date: Some(first),
            last_date: Some(last),
            days: n,
            missing_days: s.missing_count(),
        });
        series.push(s);
    }
    Ok(Ingested { stations, series, report })
}

pub fn write_stations(writer: impl Write, stations: &[Station]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(STATIONS_HEADER)?;
    for s in stations {
        w.write_record([
            s.id.as_str(),
            s.name.as_str(),
            s.district.as_str(),
            s.zone.token(),
            &format!("{:.4}", s.latitude),
            &format!("{:.4}", s.longitude),
        ])?;
    }
    w.flush().map_err(|e| Error::io("stations output", e))?;
    Ok(())
}

/// Writes records at the gauges' 0.1 mm resolution; missing days are written as `NA`.
pub fn write_records(writer: impl Write, series: &[RainSeries]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RECORDS_HEADER)?;
    for s in series {
        for (date, v) in s.iter_dated() {
            let cell = v.map_or_else(|| "NA".to_string(), |v| format!("{v:.1}"));
            w.write_record([s.station_id.as_str(), &date.to_string(), &cell])?;
        }
    }
    w.flush().map_err(|e| Error::io("records output", e))?;
    Ok(())
}
