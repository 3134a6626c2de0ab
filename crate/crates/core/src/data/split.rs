use rand::seq::SliceRandom;

use super::Dataset;
use crate::error::{Error, Result};
use crate::masking::RandomSource;

#[derive(Debug, Clone)]
pub struct Splits {
    pub train: Dataset,
    pub val: Dataset,
    pub test: Dataset,
}

/// Shuffled train/val/test partition; the same seed always yields the same partition.
pub fn split(dataset: &Dataset, ratios: (f64, f64, f64), seed: u64) -> Result<Splits> {
    let (a, b, c) = ratios;
    if [a, b, c].iter().any(|r| !(0.0..=1.0).contains(r)) || ((a + b + c) - 1.0).abs() > 1e-9 {
        return Err(Error::Config(format!(
            "split ratios must be non-negative and sum to 1, got ({a}, {b}, {c})"
        )));
    }
    let total = dataset.len();
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut RandomSource::new(seed));
    let n_train = ((a * total as f64).round() as usize).min(total);
    let n_val = ((b * total as f64).round() as usize).min(total - n_train);
    let (train, rest) = order.split_at(n_train);
    let (val, test) = rest.split_at(n_val);
    Ok(Splits {
        train: dataset.select(train),
        val: dataset.select(val),
        test: dataset.select(test),
    })
}
