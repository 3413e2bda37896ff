use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::network::{backward, loss, RegressorParams};
use super::optim::{Adam, AdamConfig};
use crate::error::{Error, Result};
use crate::labeling::{Dataset, ErrorSample};

pub const MIN_DATASET: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub max_epochs: usize,
    pub val_fraction: f64,
    pub plateau_patience: usize,
    pub plateau_delta: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_epochs: 20,
            val_fraction: 0.1,
            plateau_patience: 3,
            plateau_delta: 1e-4,
            batch_size: 32,
            learning_rate: 1e-3,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.val_fraction > 0.0 && self.val_fraction < 1.0) {
            return Err(Error::config("train.val_fraction", "must lie strictly between 0 and 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("train.batch_size", "must be >= 1"));
        }
        if self.plateau_patience == 0 {
            return Err(Error::config("train.plateau_patience", "must be >= 1"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("train.learning_rate", "must be finite and non-negative"));
        }
        if !(self.plateau_delta >= 0.0) {
            return Err(Error::config("train.plateau_delta", "must be non-negative"));
        }
        Ok(())
    }
}

/// Stops once the validation loss has changed by less than `delta` for
/// `patience` consecutive epochs.
#[derive(Debug, Clone)]
pub struct PlateauStopper {
    patience: usize,
    delta: f64,
    prev: Option<f64>,
    run: usize,
}

impl PlateauStopper {
    pub fn new(patience: usize, delta: f64) -> Self {
        Self { patience, delta, prev: None, run: 0 }
    }

    /// Feeds one epoch's validation loss; returns true when training should stop.
    pub fn observe(&mut self, val_loss: f64) -> bool {
        if let Some(p) = self.prev {
            if (val_loss - p).abs() < self.delta {
                self.run += 1;
            } else {
                self.run = 0;
            }
        }
        self.prev = Some(val_loss);
        self.run >= self.patience
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: Vec<EpochStats>,
    /// Validation loss of the starting weights.
    pub initial_val_loss: f64,
    pub best_val_loss: f64,
    /// 0 means the starting weights were kept.
    pub best_epoch: usize,
    pub stopped_on_plateau: bool,
    pub train_size: usize,
    pub val_size: usize,
}

/// Seeded shuffle split into `(train, validation)` index lists.
pub fn split_indices(n: usize, val_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_val = ((val_fraction * n as f64).round() as usize).clamp(1, n.saturating_sub(1).max(1));
    let train = idx.split_off(n_val);
    (train, idx)
}

/// Minibatch Adam on a seeded train/validation split. Returns the weights of
/// the best validation epoch (possibly the starting weights).
pub fn train(init: &RegressorParams, dataset: &Dataset, cfg: &TrainConfig) -> Result<(RegressorParams, TrainReport)> {
    cfg.validate()?;
    if dataset.len() < MIN_DATASET {
        return Err(Error::DatasetTooSmall { got: dataset.len(), need: MIN_DATASET });
    }
    let (train_idx, val_idx) = split_indices(dataset.len(), cfg.val_fraction, cfg.seed);
    let val: Vec<&ErrorSample> = val_idx.iter().map(|&i| &dataset.samples[i]).collect();

    let initial_val_loss = loss(init, &val)?;
    let mut report = TrainReport {
        epochs: Vec::new(),
        initial_val_loss,
        best_val_loss: initial_val_loss,
        best_epoch: 0,
        stopped_on_plateau: false,
        train_size: train_idx.len(),
        val_size: val_idx.len(),
    };
    if cfg.max_epochs == 0 {
        return Ok((init.clone(), report));
    }

    let mut params = init.clone();
    let mut best = init.clone();
    let mut opt = Adam::new(&params, AdamConfig { lr: cfg.learning_rate, ..Default::default() });
    let mut stopper = PlateauStopper::new(cfg.plateau_patience, cfg.plateau_delta);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut order = train_idx;
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let batch: Vec<&ErrorSample> = chunk.iter().map(|&i| &dataset.samples[i]).collect();
            let (l, grad) = backward(&params, &batch)?;
            sum += l * batch.len() as f64;
            opt.step(&mut params, &grad);
        }
        let train_loss = sum / order.len() as f64;
        let val_loss = loss(&params, &val)?;
        report.epochs.push(EpochStats { epoch, train_loss, val_loss });
        if val_loss < report.best_val_loss {
            report.best_val_loss = val_loss;
            report.best_epoch = epoch;
            best = params.clone();
        }
        if stopper.observe(val_loss) {
            report.stopped_on_plateau = true;
            break;
        }
    }
    Ok((best, report))
}
