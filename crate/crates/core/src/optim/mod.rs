//! Loss, optimizer and the training loop.

mod adam;
mod loss;
mod train;

pub use adam::{AdamConfig, AdamState};
pub use loss::{mse, mse_with_grad};
pub use train::{dataset_mse, epoch_batches, train, EpochRecord, TrainConfig, TrainReport};
