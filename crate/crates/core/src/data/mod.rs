//! Datasets: MNIST IDX ingestion, synthetic generation and deterministic splits.

pub mod cache;
pub mod idx;
mod split;
mod synthetic;

pub use idx::{load_idx, load_mnist_dir, MnistSplits};
pub use split::{split, Splits};
pub use synthetic::{gen_synthetic, SyntheticRule, SyntheticSpec};

use crate::error::{Error, Result};
use crate::numerics::Tensor2D;

/// A labelled example.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub x: Vec<f64>,
    pub t: usize,
}

/// Labelled feature vectors stored as one row per example.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    features: Tensor2D,
    labels: Vec<usize>,
    classes: usize,
    image_shape: Option<(usize, usize)>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        features: Tensor2D,
        labels: Vec<usize>,
        classes: usize,
        image_shape: Option<(usize, usize)>,
    ) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::Consistency(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if let Some(&t) = labels.iter().find(|&&t| t >= classes) {
            return Err(Error::Index {
                what: "label",
                index: t,
                limit: classes,
            });
        }
        if let Some(v) = features.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Consistency(format!("feature value {v} outside [0, 1]")));
        }
        if let Some((h, w)) = image_shape {
            if h * w != features.cols() {
                return Err(Error::Consistency(format!(
                    "image shape {h}x{w} does not match {} features",
                    features.cols()
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            features,
            labels,
            classes,
            image_shape,
        })
    }

    pub fn from_examples(
        name: impl Into<String>,
        examples: &[Example],
        classes: usize,
    ) -> Result<Self> {
        let n = examples.first().map_or(0, |e| e.x.len());
        let mut data = Vec::with_capacity(examples.len() * n);
        for e in examples {
            if e.x.len() != n {
                return Err(Error::Dimension {
                    op: "from_examples",
                    left: (1, n),
                    right: (1, e.x.len()),
                });
            }
            data.extend_from_slice(&e.x);
        }
        let features = Tensor2D::from_vec(examples.len(), n, data)?;
        Self::new(name, features, examples.iter().map(|e| e.t).collect(), classes, None)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Feature count `n`.
    pub fn features_per_example(&self) -> usize {
        self.features.cols()
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn image_shape(&self) -> Option<(usize, usize)> {
        self.image_shape
    }

    pub fn features(&self) -> &Tensor2D {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn x(&self, i: usize) -> &[f64] {
        self.features.row(i)
    }

    pub fn example(&self, i: usize) -> Example {
        Example {
            x: self.x(i).to_vec(),
            t: self.labels[i],
        }
    }

    /// A new dataset holding the listed examples in the given order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        Dataset {
            name: self.name.clone(),
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            classes: self.classes,
            image_shape: self.image_shape,
        }
    }

    /// The first `count` examples (or all of them).
    pub fn head(&self, count: usize) -> Dataset {
        let idx: Vec<usize> = (0..count.min(self.len())).collect();
        self.select(&idx)
    }
}
