//! Sufficient-subset training: the dual-propagation loop, a standard-training
//! mode for reference models, and hyperparameter sweeps.

mod config;
mod log;
mod optim;
mod step;
mod sweep;

pub use config::{GradMode, TrainConfig, TrainMode};
pub use log::{EpochRecord, TrainLog, TRAIN_LOG_COLUMNS, TRAIN_LOG_SCHEMA};
pub use optim::Adam;
pub use step::{sst_objective, sst_step, standard_objective, LossComponents, Objective, StepOutcome};
pub use sweep::{sweep, sweep_xi, SweepAxis, SweepCell, SweepMetrics, SweepTable, XiRow, SWEEP_SCHEMA};

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::RngCore;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::evaluation::{accuracy_pct, mean_size_pct};
use crate::masking::RandomSource;
use crate::model::ModelParams;

/// Seeded train/validation index partition: validation is the last
/// `val_fraction` of a shuffled copy of the dataset.
pub fn train_val_indices(len: usize, val_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..len).collect();
    order.shuffle(&mut RandomSource::new(seed));
    let n_val = (len as f64 * val_fraction).floor() as usize;
    let val = order.split_off(len - n_val);
    (order, val)
}

/// Trains a fresh model; fully deterministic for a fixed dataset and config.
pub fn train(dataset: &Dataset, cfg: &TrainConfig) -> Result<(ModelParams, TrainLog)> {
    train_observed(dataset, cfg, |_| {})
}

/// [`train`] with a callback invoked after every epoch.
pub fn train_observed(
    dataset: &Dataset,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(ModelParams, TrainLog)> {
    cfg.validate()?;
    if dataset.is_empty() {
        return Err(Error::Config("cannot train on an empty dataset".into()));
    }
    let mut rng = RandomSource::new(cfg.seed);
    let split_seed = rng.next_u64();
    let (train_idx, val_idx) = train_val_indices(dataset.len(), cfg.val_fraction, split_seed);
    if train_idx.is_empty() {
        return Err(Error::Config("validation split leaves no training examples".into()));
    }
    let train_set = dataset.select(&train_idx);
    let val_set = dataset.select(&val_idx);

    let arch = cfg.architecture(
        dataset.features_per_example(),
        dataset.classes(),
        dataset.image_shape(),
    );
    let mut params = ModelParams::init(arch, &mut rng.fork())?;
    let mut optimizer = Adam::new(&params, cfg.lr);
    let mut order_rng = rng.fork();
    let mut step_rng = rng.fork();

    let mut log = TrainLog::default();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 1..=cfg.epochs {
        let started = Instant::now();
        order.shuffle(&mut order_rng);
        let (mut pred, mut faith, mut card, mut size) = (0.0, 0.0, 0.0, 0.0);
        let mut correct = 0;
        for chunk in order.chunks(cfg.batch) {
            let x = train_set.features().select_rows(chunk);
            let t: Vec<usize> = chunk.iter().map(|&i| train_set.labels()[i]).collect();
            let out = sst_step(&mut params, &mut optimizer, &x, &t, cfg, &mut step_rng)?;
            let w = out.rows as f64;
            pred += out.losses.pred * w;
            faith += out.losses.faith * w;
            card += out.losses.card * w;
            size += out.mean_size_pct * w;
            correct += out.correct;
        }
        let total = train_set.len() as f64;
        let val_acc = if val_set.is_empty() {
            0.0
        } else {
            accuracy_pct(&params, &val_set)?
        };
        let mean_size = if val_set.is_empty() {
            size / total
        } else {
            mean_size_pct(&params, &val_set)?
        };
        let record = EpochRecord {
            epoch,
            l_pred: pred / total,
            l_faith: faith / total,
            l_card: card / total,
            train_acc: 100.0 * correct as f64 / total,
            val_acc,
            mean_size_pct: mean_size,
            seconds: if cfg.record_timing {
                started.elapsed().as_secs_f64()
            } else {
                0.0
            },
        };
        on_epoch(&record);
        log.records.push(record);
    }
    Ok((params, log))
}
