//! Stratified evaluation reports and the prediction dump.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{categorize, ImdCategory, Split, WindowedDataset, Zone};
use crate::eval::metrics::{MetricAccumulator, MetricPair};
use crate::models::ModelGraph;
use crate::tensor::Tensor;
use crate::{Error, Result};

/// Label of the all-stations row in zone tables.
pub const REGION_LABEL: &str = "Rajasthan Region";

const PREDICT_CHUNK: usize = 256;

/// One forecast next to its observation, both in mm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub station_id: String,
    pub date: NaiveDate,
    pub actual_mm: f64,
    pub predicted_mm: f64,
    /// IMD band of the actual value.
    pub category: ImdCategory,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationMetrics {
    pub station_id: String,
    pub name: String,
    pub zone: Zone,
    pub metrics: MetricPair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Model or baseline that produced the predictions.
    pub model: String,
    pub split: Split,
    pub overall: MetricPair,
    #[serde(default)]
    pub zones: BTreeMap<Zone, MetricPair>,
    #[serde(default)]
    pub stations: Vec<StationMetrics>,
    #[serde(default)]
    pub categories: BTreeMap<ImdCategory, MetricPair>,
    /// Per-row forecasts; written separately by [`write_predictions`].
    #[serde(skip)]
    pub predictions: Vec<PredictionRecord>,
}

/// Model outputs for `rows`, normalized units, in row order.
///
/// Rows are scored in fixed-size chunks on the rayon pool; each chunk is a
/// pure function of the parameters, so the result does not depend on the
/// number of threads.
pub fn predict_normalized(model: &ModelGraph, data: &WindowedDataset, rows: &[usize]) -> Result<Vec<f64>> {
    if rows.is_empty() {
        return Ok(Vec::new());
    }
    let chunks: Vec<Tensor> = rows
        .par_chunks(PREDICT_CHUNK)
        .map(|chunk| {
            let batch = data.batch(chunk)?;
            model.predict(&batch.x, &batch.coords)
        })
        .collect::<Result<_>>()?;
    Ok(chunks.into_iter().flat_map(Tensor::into_data).collect())
}

/// Model forecasts for `rows` in mm, clamped at zero.
pub fn predict_mm(model: &ModelGraph, data: &WindowedDataset, rows: &[usize]) -> Result<Vec<f64>> {
    let norm = data.normalizer();
    Ok(predict_normalized(model, data, rows)?
        .into_iter()
        .map(|p| norm.denormalize(p).max(0.0))
        .collect())
}

/// Overall MAE/RMSE in mm of the model on `rows`.
pub fn split_metrics(model: &ModelGraph, data: &WindowedDataset, rows: &[usize]) -> Result<MetricPair> {
    let pred = predict_mm(model, data, rows)?;
    let mut acc = MetricAccumulator::default();
    for (&i, p) in rows.iter().zip(pred) {
        acc.push(p, data.target_mm(i));
    }
    acc.finish().ok_or_else(|| Error::arg("cannot score an empty row set"))
}

/// Scores `model` on one split of `data`.
pub fn evaluate(model: &ModelGraph, data: &WindowedDataset, split: Split) -> Result<EvalReport> {
    if data.seq_len() != model.seq_len() {
        return Err(Error::arg(format!(
            "dataset windows have length {}, model expects {}",
            data.seq_len(),
            model.seq_len()
        )));
    }
    let rows = data.indices(split);
    let pred = predict_mm(model, data, &rows)?;
    evaluate_predictions(model.architecture().name(), data, split, &rows, &pred)
}

/// Builds a report from precomputed forecasts in mm. Negative forecasts are
/// clamped at zero before scoring.
pub fn evaluate_predictions(model: &str, data: &WindowedDataset, split: Split, rows: &[usize], pred_mm: &[f64]) -> Result<EvalReport> {
    if rows.is_empty() {
        return Err(Error::arg(format!("the {} split is empty", split.name())));
    }
    if rows.len() != pred_mm.len() {
        return Err(Error::arg(format!("{} predictions for {} rows", pred_mm.len(), rows.len())));
    }
    let mut overall = MetricAccumulator::default();
    let mut zones: BTreeMap<Zone, MetricAccumulator> = BTreeMap::new();
    let mut stations: BTreeMap<&str, (MetricAccumulator, &crate::data::Station)> = BTreeMap::new();
    let mut categories: BTreeMap<ImdCategory, MetricAccumulator> = BTreeMap::new();
    let mut predictions = Vec::with_capacity(rows.len());

    for (&i, &p) in rows.iter().zip(pred_mm) {
        let row = data.row(i);
        if row.split != split {
            return Err(Error::arg(format!("row {i} belongs to the {} split, not {}", row.split.name(), split.name())));
        }
        if !p.is_finite() {
            return Err(Error::Numeric {
                param: "prediction".into(),
                detail: format!("row {i} ({} {}) forecast is {p}", row.station.id, row.target_date),
            });
        }
        let predicted = p.max(0.0);
        let actual = data.target_mm(i).max(0.0);
        let category = categorize(actual)?;
        overall.push(predicted, actual);
        zones.entry(row.station.zone).or_default().push(predicted, actual);
        stations
            .entry(row.station.id.as_str())
            .or_insert_with(|| (MetricAccumulator::default(), row.station))
            .0
            .push(predicted, actual);
        categories.entry(category).or_default().push(predicted, actual);
        predictions.push(PredictionRecord {
            station_id: row.station.id.clone(),
            date: row.target_date,
            actual_mm: actual,
            predicted_mm: predicted,
            category,
        });
    }

    let finish = |acc: &MetricAccumulator| acc.finish().expect("accumulators are created on first push");
    Ok(EvalReport {
        model: model.to_string(),
        split,
        overall: finish(&overall),
        zones: zones.iter().map(|(z, a)| (*z, finish(a))).collect(),
        stations: stations
            .values()
            .map(|(a, s)| StationMetrics {
                station_id: s.id.clone(),
                name: s.name.clone(),
                zone: s.zone,
                metrics: finish(a),
            })
            .collect(),
        categories: categories.iter().map(|(c, a)| (*c, finish(a))).collect(),
        predictions,
    })
}

fn metric_cells(m: Option<&MetricPair>) -> (String, String, String) {
    match m {
        Some(m) => (format!("{:.4}", m.mae), format!("{:.4}", m.rmse), m.n.to_string()),
        None => ("-".into(), "-".into(), "0".into()),
    }
}

impl EvalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: Self = serde_json::from_str(text)?;
        report.validate()?;
        Ok(report)
    }

    fn validate(&self) -> Result<()> {
        let all = std::iter::once(&self.overall)
            .chain(self.zones.values())
            .chain(self.categories.values())
            .chain(self.stations.iter().map(|s| &s.metrics));
        for m in all {
            if !(m.mae.is_finite() && m.rmse.is_finite() && m.mae >= 0.0 && m.rmse >= 0.0) {
                return Err(Error::format(
                    "evaluation report",
                    format!("metrics must be finite and non-negative, got {m:?}"),
                ));
            }
        }
        Ok(())
    }

    /// Zone table with the region-wide row last.
    pub fn render_zone_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<32} {:>10} {:>10} {:>8}", "Zone", "MAE", "RMSE", "N");
        for zone in Zone::ALL {
            let (mae, rmse, n) = metric_cells(self.zones.get(&zone));
            let _ = writeln!(out, "{:<32} {mae:>10} {rmse:>10} {n:>8}", zone.label());
        }
        let (mae, rmse, n) = metric_cells(Some(&self.overall));
        let _ = writeln!(out, "{REGION_LABEL:<32} {mae:>10} {rmse:>10} {n:>8}");
        out
    }

    pub fn render_station_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<10} {:<28} {:<32} {:>10} {:>10} {:>8}", "Station", "Name", "Zone", "MAE", "RMSE", "N");
        for s in &self.stations {
            let (mae, rmse, n) = metric_cells(Some(&s.metrics));
            let _ = writeln!(out, "{:<10} {:<28} {:<32} {mae:>10} {rmse:>10} {n:>8}", s.station_id, s.name, s.zone.label());
        }
        out
    }

    pub fn render_category_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<22} {:>10} {:>10} {:>8}", "Actual intensity", "MAE", "RMSE", "N");
        for c in ImdCategory::ALL {
            let (mae, rmse, n) = metric_cells(self.categories.get(&c));
            let _ = writeln!(out, "{:<22} {mae:>10} {rmse:>10} {n:>8}", c.label());
        }
        out
    }

    /// All three tables under a heading naming the model and split.
    pub fn render(&self) -> String {
        format!(
            "{} on the {} split ({} samples)\n\n{}\n{}\n{}",
            self.model,
            self.split.name(),
            self.overall.n,
            self.render_zone_table(),
            self.render_station_table(),
            self.render_category_table()
        )
    }
}

/// Writes `station_id,date,actual_mm,predicted_mm,category` rows, mm to two decimals.
pub fn write_predictions<W: Write>(writer: W, records: &[PredictionRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["station_id", "date", "actual_mm", "predicted_mm", "category"])?;
    for r in records {
        w.write_record([
            r.station_id.as_str(),
            &r.date.format("%Y-%m-%d").to_string(),
            &format!("{:.2}", r.actual_mm),
            &format!("{:.2}", r.predicted_mm),
            r.category.token(),
        ])?;
    }
    w.flush().map_err(|e| Error::io("prediction dump", e))?;
    Ok(())
}
