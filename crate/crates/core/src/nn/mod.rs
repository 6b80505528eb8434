//! Dense classifier trained with mini-batch Adam.
//!
//! Architecture: optional inverted dropout on the input, then one block per
//! hidden width (dense layer, ReLU and batch normalization, in the order given
//! by [`LayerOrder`]), then a dense output layer with softmax.
//! Everything is `f64` and single-threaded, so a training run is bit-for-bit
//! reproducible from its seeds.

mod adam;
mod checkpoint;
mod config;
mod loss;
mod network;
mod schedule;
mod train;

use thiserror::Error;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{history_csv, load_checkpoint, save_checkpoint, write_history_csv, CHECKPOINT_MAGIC};
pub use config::{LayerOrder, NetworkConfig, PlateauConfig, TrainingSchedule};
pub use loss::{cross_entropy_loss, softmax_rows, PROB_FLOOR};
pub use network::{
    dropout_mask, init_network, BatchNorm, BatchNormStats, BlockGradients, DenseGradients, DenseLayer, ForwardCache,
    ForwardMode, ForwardOutput, Gradients, HiddenBlock, ParamCount, TrainPass, TrainedModel,
};
pub use schedule::{reduce_lr_on_plateau, PlateauScheduler};
pub use train::{argmax_rows, predict, train, EpochRecord, Prediction};

#[derive(Debug, Error)]
pub enum NnError {
    #[error("invalid network configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid training schedule: {0}")]
    InvalidSchedule(String),
    #[error("input has {found} columns, network expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("train-mode batch normalization needs at least 2 records, got {0}")]
    BatchTooSmall(usize),
    #[error("backward pass needs a train-mode forward cache for a batch of {expected} records, got {found}")]
    StaleCache { expected: usize, found: usize },
    #[error("non-finite training loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },
    #[error("dataset problem: {0}")]
    Data(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = NnError> = std::result::Result<T, E>;
