//! Joint training: every branch and the output head are updated together
//! against one MSE loss.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::{Split, WindowedDataset};
use crate::eval::{predict_normalized, MetricPair};
use crate::layers::Mode;
use crate::models::ModelGraph;
use crate::optim::{mse, mse_with_grad, AdamConfig, AdamState};
use crate::rng::{streams, Rng};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Reshuffle the training rows every epoch.
    pub shuffle: bool,
    /// Stop after this many epochs without a validation-RMSE improvement.
    pub patience: Option<usize>,
    /// Rescale gradients whose global L2 norm exceeds this value.
    pub clip_norm: Option<f64>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 8,
            adam: AdamConfig::default(),
            seed: 0,
            shuffle: true,
            patience: None,
            clip_norm: None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::arg("epochs must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::arg("batch_size must be >= 1"));
        }
        if !(self.adam.lr >= 0.0 && self.adam.lr.is_finite()) {
            return Err(Error::arg(format!("learning rate must be finite and >= 0, got {}", self.adam.lr)));
        }
        if matches!(self.clip_norm, Some(c) if c.is_nan() || c <= 0.0) {
            return Err(Error::arg("clip_norm must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean per-sample training loss over the epoch, normalized units, dropout active.
    pub train_loss: f64,
    /// Validation metrics in mm, predictions clamped at zero.
    pub val: Option<MetricPair>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub architecture: String,
    pub seed: u64,
    pub config: TrainConfig,
    pub train_rows: usize,
    pub val_rows: usize,
    pub num_params: usize,
    /// Training-split MSE in inference mode before the first update.
    pub initial_train_mse: f64,
    /// Training-split MSE in inference mode with the retained parameters.
    pub final_train_mse: f64,
    pub epochs: Vec<EpochRecord>,
    /// 1-based epoch whose parameters were kept (lowest validation RMSE, or the last epoch without a validation split).
    pub best_epoch: usize,
    pub best_val: Option<MetricPair>,
    pub stopped_early: bool,
    pub wall_time_secs: f64,
}

impl TrainReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Splits `rows` into batches, after an in-place shuffle when `rng` is given.
/// Every row lands in exactly one batch; the last batch may be short.
pub fn epoch_batches(rows: &[usize], batch_size: usize, rng: Option<&mut Rng>) -> Vec<Vec<usize>> {
    let mut order = rows.to_vec();
    if let Some(rng) = rng {
        rng.shuffle(&mut order);
    }
    order.chunks(batch_size.max(1)).map(<[usize]>::to_vec).collect()
}

/// Inference-mode MSE of the model over `rows`, normalized units.
pub fn dataset_mse(model: &ModelGraph, data: &WindowedDataset, rows: &[usize]) -> Result<f64> {
    let pred = predict_normalized(model, data, rows)?;
    let target: Vec<f64> = rows.iter().map(|&i| data.row(i).target).collect();
    mse(&pred, &target)
}

/// Trains `model` on the training split. On return the model holds the
/// parameters of the best validation epoch.
pub fn train(model: &mut ModelGraph, data: &WindowedDataset, cfg: &TrainConfig) -> Result<TrainReport> {
    cfg.validate()?;
    if data.seq_len() != model.seq_len() {
        return Err(Error::arg(format!(
            "dataset windows have length {}, model expects {}",
            data.seq_len(),
            model.seq_len()
        )));
    }
    let train_rows = data.indices(Split::Train);
    if train_rows.is_empty() {
        return Err(Error::arg("training split is empty"));
    }
    let val_rows = data.indices(Split::Val);
    let started = Instant::now();

    let mut shuffle_rng = Rng::with_stream(cfg.seed, streams::SHUFFLE);
    let mut dropout_rng = Rng::with_stream(cfg.seed, streams::DROPOUT);
    let mut adam = AdamState::for_model(model, cfg.adam);
    let names = model.param_names().to_vec();

    let initial_train_mse = dataset_mse(model, data, &train_rows)?;
    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut best: Option<(usize, MetricPair, Vec<crate::tensor::Tensor>)> = None;
    let mut stopped_early = false;

    for epoch in 1..=cfg.epochs {
        let batches = epoch_batches(&train_rows, cfg.batch_size, cfg.shuffle.then_some(&mut shuffle_rng));
        let mut loss_sum = 0.0;
        for (bi, rows) in batches.iter().enumerate() {
            let batch = data.batch(rows)?;
            let pred = model.forward(&batch.x, &batch.coords, Mode::Train, &mut dropout_rng)?;
            let (loss, grad_out) = mse_with_grad(&pred, &batch.targets)?;
            if !loss.is_finite() {
                model.clear_cache();
                return Err(Error::Divergence { epoch, batch: bi, loss });
            }
            let mut grads = model.backward(&grad_out)?;
            if let Some(max_norm) = cfg.clip_norm {
                let norm = grads.global_norm();
                if norm > max_norm {
                    grads.scale(max_norm / norm);
                }
            }
            adam.step(&mut model.params_mut(), &grads, &names)?;
            loss_sum += loss * rows.len() as f64;
        }
        let train_loss = loss_sum / train_rows.len() as f64;

        let val = if val_rows.is_empty() {
            None
        } else {
            Some(crate::eval::split_metrics(model, data, &val_rows)?)
        };
        log::info!(
            "epoch {epoch}/{}: train loss {train_loss:.6}{}",
            cfg.epochs,
            val.as_ref().map_or(String::new(), |v| format!(", val MAE {:.4} RMSE {:.4}", v.mae, v.rmse))
        );
        epochs.push(EpochRecord {
            epoch,
            train_loss,
            val,
        });

        if let Some(v) = val {
            if best.as_ref().is_none_or(|(_, b, _)| v.rmse < b.rmse) {
                best = Some((epoch, v, model.snapshot()));
            } else if let (Some(patience), Some((best_epoch, _, _))) = (cfg.patience, &best) {
                if epoch - best_epoch >= patience {
                    stopped_early = true;
                    break;
                }
            }
        }
    }

    let (best_epoch, best_val) = match best {
        Some((epoch, v, params)) => {
            model.restore(&params)?;
            (epoch, Some(v))
        }
        None => (epochs.len(), None),
    };
    let final_train_mse = dataset_mse(model, data, &train_rows)?;
    Ok(TrainReport {
        architecture: model.architecture().name().to_string(),
        seed: cfg.seed,
        config: cfg.clone(),
        train_rows: train_rows.len(),
        val_rows: val_rows.len(),
        num_params: model.num_params(),
        initial_train_mse,
        final_train_mse,
        epochs,
        best_epoch,
        best_val,
        stopped_early,
        wall_time_secs: started.elapsed().as_secs_f64(),
    })
}
