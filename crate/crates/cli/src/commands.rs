//! Subcommand implementations.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use dwrpm_core::data::{
    categorize, ingest as ingest_files, synth_generate, write_records, write_stations, IngestOptions, Split, SplitYears, SynthConfig, WindowedDataset,
    DEFAULT_SEQ_LEN,
};
use dwrpm_core::eval::{self, Climatology, EvalReport};
use dwrpm_core::models::{ArchSpec, Architecture, Checkpoint};
use dwrpm_core::optim::{self, AdamConfig, TrainConfig};
use dwrpm_core::rng::{streams, Rng};
use dwrpm_core::Tensor;
use serde::Serialize;

use crate::config::{ConfigFile, YearRange};
use crate::{CliError, CompareArgs, EvaluateArgs, IngestArgs, PredictArgs, SynthArgs, TrainArgs};

pub const DATASET_FILE: &str = "dataset.bin";
pub const CLEANING_REPORT_FILE: &str = "cleaning_report.txt";
pub const RECORDS_FILE: &str = "records.csv";
pub const STATIONS_FILE: &str = "stations.csv";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const TRAIN_REPORT_FILE: &str = "train_report.json";
pub const FORECAST_FILE: &str = "forecast.csv";
pub const COMPARISON_FILE: &str = "comparison.txt";

const DEFAULT_OUT: &str = "out";

/// Evaluation artifact names for one split: `(json, table, predictions)`.
pub fn eval_files(split: Split) -> (String, String, String) {
    let s = split.name();
    (format!("eval_{s}.json"), format!("eval_{s}.txt"), format!("predictions_{s}.csv"))
}

fn out_dir(cfg: &ConfigFile, flag: Option<PathBuf>) -> Result<PathBuf, CliError> {
    let dir = cfg.pick_or(flag, "out", PathBuf::from(DEFAULT_OUT))?;
    fs::create_dir_all(&dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
    Ok(dir)
}

/// An input file that must be named and must exist; both failures are usage errors.
fn input_file(cfg: &ConfigFile, flag: Option<PathBuf>, key: &str) -> Result<PathBuf, CliError> {
    let path = cfg
        .pick(flag, key)?
        .ok_or_else(|| CliError::usage(format!("--{} is required", key.replace('_', "-"))))?;
    if !path.is_file() {
        return Err(CliError::usage(format!("{key} file not found: {}", path.display())));
    }
    Ok(path)
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).context("serializing JSON")?;
    write_text(path, &(text + "\n"))
}

fn create(path: &Path) -> Result<fs::File, CliError> {
    Ok(fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?)
}

pub fn ingest(a: &IngestArgs) -> Result<(), CliError> {
    let cfg = ConfigFile::load(a.common.config.as_deref())?;
    let stations = input_file(&cfg, a.stations.clone(), "stations")?;
    let records = input_file(&cfg, a.records.clone(), "records")?;
    let seq_len = cfg.pick_or(a.seq_len, "seq_len", DEFAULT_SEQ_LEN)?;
    if seq_len == 0 {
        return Err(CliError::usage("--seq-len must be positive"));
    }
    let defaults = SplitYears::default();
    let train = cfg.pick_or(a.train_years, "train_years", YearRange(defaults.train.0, defaults.train.1))?;
    let val = cfg.pick_or(a.val_years, "val_years", YearRange(defaults.val.0, defaults.val.1))?;
    let test = cfg.pick_or(a.test_years, "test_years", YearRange(defaults.test.0, defaults.test.1))?;
    let years = SplitYears::new((train.0, train.1), (val.0, val.1), (test.0, test.1)).map_err(|e| CliError::usage(e.to_string()))?;
    let out = out_dir(&cfg, a.common.out.clone())?;

    let ingested = ingest_files(&records, &stations, IngestOptions { relax_bounds: a.relax_bounds })?;
    let (data, counts) = WindowedDataset::build(&ingested.series, &ingested.stations, seq_len, years)?;
    data.save(&out.join(DATASET_FILE))?;

    let mut report = ingested.report.render();
    report.push_str(&format!(
        "\nwindows (seq_len {seq_len}): train {} ({train}), val {} ({val}), test {} ({test}), outside split years {}\n",
        counts.train, counts.val, counts.test, counts.excluded
    ));
    report.push_str(&format!(
        "normalization range fitted on training years: {} .. {} mm\n",
        data.normalizer().x_min(),
        data.normalizer().x_max()
    ));
    write_text(&out.join(CLEANING_REPORT_FILE), &report)?;
    print!("{report}");
    Ok(())
}

pub fn synth(a: &SynthArgs) -> Result<(), CliError> {
    let cfg = ConfigFile::load(a.common.config.as_deref())?;
    if a.n_stations == 0 {
        return Err(CliError::usage("--stations must be at least 1"));
    }
    if a.years < 2 {
        return Err(CliError::usage("--years must be at least 2"));
    }
    let seed = cfg.pick_or(a.seed, "seed", 0)?;
    let out = out_dir(&cfg, a.common.out.clone())?;
    let data = synth_generate(&SynthConfig {
        n_stations: a.n_stations,
        years: a.years,
        start_year: a.start_year,
        seed,
    })
    .map_err(|e| CliError::usage(e.to_string()))?;
    write_stations(create(&out.join(STATIONS_FILE))?, &data.stations)?;
    write_records(create(&out.join(RECORDS_FILE))?, &data.series)?;
    let rows: usize = data.series.iter().map(|s| s.len()).sum();
    println!("wrote {} stations and {rows} daily records to {}", data.stations.len(), out.display());
    Ok(())
}

fn parse_arch(name: &str) -> Result<Architecture, CliError> {
    name.parse().map_err(|e: dwrpm_core::Error| CliError::usage(e.to_string()))
}

pub fn train(a: &TrainArgs) -> Result<(), CliError> {
    let cfg = ConfigFile::load(a.common.config.as_deref())?;
    let data_path = input_file(&cfg, a.data.clone(), "data")?;
    let arch = parse_arch(&cfg.pick_or(a.arch.clone(), "arch", "dwrpm".to_string())?)?;
    let defaults = TrainConfig::default();
    let seed = cfg.pick_or(a.seed, "seed", 0)?;
    let train_cfg = TrainConfig {
        epochs: cfg.pick_or(a.epochs, "epochs", defaults.epochs)?,
        batch_size: cfg.pick_or(a.batch_size, "batch_size", defaults.batch_size)?,
        adam: AdamConfig {
            lr: cfg.pick_or(a.lr, "lr", defaults.adam.lr)?,
            ..defaults.adam
        },
        seed,
        shuffle: true,
        patience: cfg.pick(a.patience, "patience")?,
        clip_norm: cfg.pick(a.clip_norm, "clip_norm")?,
    };
    train_cfg.validate().map_err(|e| CliError::usage(e.to_string()))?;
    let seq_len = cfg.pick(a.seq_len, "seq_len")?;
    let out = out_dir(&cfg, a.common.out.clone())?;

    let data = WindowedDataset::load(&data_path)?;
    if let Some(n) = seq_len {
        if n != data.seq_len() {
            return Err(CliError::usage(format!(
                "--seq-len {n} does not match the dataset cache, which holds {}-day windows",
                data.seq_len()
            )));
        }
    }
    let mut model = ArchSpec::default_for(arch).build(data.seq_len(), &mut Rng::with_stream(seed, streams::INIT))?;
    log::info!(
        "training {arch} ({} parameters) on {} windows for {} epochs",
        model.num_params(),
        data.count(Split::Train),
        train_cfg.epochs
    );
    let report = optim::train(&mut model, &data, &train_cfg)?;
    let checkpoint = Checkpoint {
        model,
        normalizer: *data.normalizer(),
        seed,
    };
    checkpoint.save(&out.join(CHECKPOINT_FILE))?;
    write_json(&out.join(TRAIN_REPORT_FILE), &report)?;
    println!(
        "{arch}: training MSE {:.6} -> {:.6}, kept epoch {}{}",
        report.initial_train_mse,
        report.final_train_mse,
        report.best_epoch,
        report
            .best_val
            .map_or(String::new(), |v| format!(" (val MAE {:.4} mm, RMSE {:.4} mm)", v.mae, v.rmse))
    );
    Ok(())
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint, CliError> {
    Ok(Checkpoint::load(path).with_context(|| format!("cannot load checkpoint {}", path.display()))?)
}

fn save_report(out: &Path, report: &EvalReport, suffix: &str) -> Result<(), CliError> {
    let (json, table, preds) = eval_files(report.split);
    let tag = |name: &str| match suffix {
        "" => name.to_string(),
        s => name.replacen('.', &format!("_{s}."), 1),
    };
    write_text(&out.join(tag(&json)), &(report.to_json()? + "\n"))?;
    write_text(&out.join(tag(&table)), &report.render())?;
    eval::write_predictions(create(&out.join(tag(&preds)))?, &report.predictions)?;
    Ok(())
}

pub fn evaluate(a: &EvaluateArgs) -> Result<(), CliError> {
    let cfg = ConfigFile::load(a.common.config.as_deref())?;
    let ckpt_path = input_file(&cfg, a.checkpoint.clone(), "checkpoint")?;
    let data_path = input_file(&cfg, a.data.clone(), "data")?;
    let split: Split = cfg
        .pick_or(a.split.clone(), "split", "test".to_string())?
        .parse()
        .map_err(|e: dwrpm_core::Error| CliError::usage(e.to_string()))?;
    let out = out_dir(&cfg, a.common.out.clone())?;

    let ckpt = load_checkpoint(&ckpt_path)?;
    let data = WindowedDataset::load(&data_path)?;
    if ckpt.model.seq_len() != data.seq_len() {
        return Err(CliError::Runtime(anyhow::anyhow!(
            "{} expects {}-day windows but the dataset cache holds {}-day windows",
            ckpt.model.architecture(),
            ckpt.model.seq_len(),
            data.seq_len()
        )));
    }
    if ckpt.normalizer != *data.normalizer() {
        return Err(CliError::Runtime(anyhow::anyhow!(
            "checkpoint was trained with normalization range {:?} but the dataset cache uses {:?}",
            ckpt.normalizer,
            data.normalizer()
        )));
    }
    let report = eval::evaluate(&ckpt.model, &data, split)?;
    save_report(&out, &report, "")?;
    print!("{}", report.render());

    if a.baselines {
        let rows = data.indices(split);
        let zero = eval::evaluate_predictions("zero", &data, split, &rows, &eval::zero_forecast(&rows))?;
        let clim = Climatology::fit(&data)?;
        let clim = eval::evaluate_predictions("climatology", &data, split, &rows, &clim.forecast(&data, &rows))?;
        for r in [&zero, &clim] {
            save_report(&out, r, &r.model)?;
            println!("{:<12} MAE {:.4} mm, RMSE {:.4} mm", r.model, r.overall.mae, r.overall.rmse);
        }
    }
    Ok(())
}

pub fn predict(a: &PredictArgs) -> Result<(), CliError> {
    let cfg = ConfigFile::load(a.common.config.as_deref())?;
    let ckpt_path = input_file(&cfg, a.checkpoint.clone(), "checkpoint")?;
    let stations = input_file(&cfg, a.stations.clone(), "stations")?;
    let records = input_file(&cfg, a.records.clone(), "records")?;
    let out = out_dir(&cfg, a.common.out.clone())?;

    let ckpt = load_checkpoint(&ckpt_path)?;
    let ingested = ingest_files(&records, &stations, IngestOptions { relax_bounds: a.relax_bounds })?;
    let seq_len = ckpt.model.seq_len();
    let mut x = Vec::new();
    let mut coords = Vec::new();
    let mut targets = Vec::new();
    for series in &ingested.series {
        let station = ingested
            .stations
            .iter()
            .find(|s| s.id == series.station_id)
            .expect("ingest only keeps series of known stations");
        let Some(end) = series.end() else { continue };
        if series.len() < seq_len {
            log::warn!("{}: only {} days on record, {seq_len} needed; skipped", station.id, series.len());
            continue;
        }
        let window = &series.values[series.len() - seq_len..];
        if window.iter().any(Option::is_none) {
            log::warn!("{}: missing days within the last {seq_len}; skipped", station.id);
            continue;
        }
        x.extend(window.iter().map(|v| ckpt.normalizer.normalize(v.expect("checked"))));
        coords.extend_from_slice(&station.coords());
        targets.push((station.id.clone(), end.succ_opt().context("date overflow")?));
    }
    if targets.is_empty() {
        return Err(CliError::Runtime(anyhow::anyhow!(
            "no station has {seq_len} consecutive recorded days ending at its last record"
        )));
    }
    let b = targets.len();
    let pred = ckpt.model.predict(&Tensor::new(&[b, seq_len], x)?, &Tensor::new(&[b, 2], coords)?)?;

    let mut w = csv::Writer::from_writer(create(&out.join(FORECAST_FILE))?);
    w.write_record(["station_id", "date", "predicted_mm", "category"]).context("writing forecast")?;
    for ((id, date), p) in targets.iter().zip(pred.data()) {
        let mm = ckpt.normalizer.denormalize(*p).max(0.0);
        let cat = categorize(mm)?;
        w.write_record([id.as_str(), &date.to_string(), &format!("{mm:.2}"), cat.token()])
            .context("writing forecast")?;
        println!("{id} {date} {mm:>8.2} mm  {}", cat.label());
    }
    w.flush().context("writing forecast")?;
    Ok(())
}

pub fn compare(a: &CompareArgs) -> Result<(), CliError> {
    if a.reports.len() < 2 {
        return Err(CliError::usage(format!("compare needs at least two reports, got {}", a.reports.len())));
    }
    if !a.names.is_empty() && a.names.len() != a.reports.len() {
        return Err(CliError::usage(format!("{} names given for {} reports", a.names.len(), a.reports.len())));
    }
    let mut reports = Vec::with_capacity(a.reports.len());
    for (i, path) in a.reports.iter().enumerate() {
        if !path.is_file() {
            return Err(CliError::usage(format!("report file not found: {}", path.display())));
        }
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        let report = EvalReport::from_json(&text).with_context(|| format!("invalid report {}", path.display()))?;
        let name = a.names.get(i).cloned().unwrap_or_else(|| report.model.clone());
        reports.push((name, report));
    }
    let table = eval::compare(&reports)?;
    let rendered = table.render();
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).with_context(|| format!("cannot create output directory {}", dir.display()))?;
        write_text(&dir.join(COMPARISON_FILE), &rendered)?;
        write_json(&dir.join("comparison.json"), &table)?;
    }
    print!("{rendered}");
    Ok(())
}
