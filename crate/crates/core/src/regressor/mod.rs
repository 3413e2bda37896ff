//! Two-prong model-error regressor: a conv stack over the image history
//! initialises an LSTM that consumes encoded actions; the flattened hidden
//! states feed a small leaky-ReLU head with a linear scalar output.

mod checkpoint;
pub mod layers;
mod network;
mod optim;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointMeta};
pub use network::{backward, loss, ArchConfig, ImageEncoding, RegressorParams};
pub use optim::{Adam, AdamConfig};
pub use train::{split_indices, train, EpochStats, PlateauStopper, TrainConfig, TrainReport, MIN_DATASET};
