//! Seeded training loop, early stopping, checkpoints and run reports.

mod checkpoint;
mod early_stop;
mod report;
mod train;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, load_checkpoint, save_checkpoint, Checkpoint};
pub use early_stop::{early_stop_check, EarlyStop};
pub use report::{run_report, HISTORY_HEADER};
pub use train::{
    batches, predict_dataset, train, validation_split, EpochStats, StopReason, TrainConfig, TrainHistory,
};

#[cfg(test)]
mod tests;
