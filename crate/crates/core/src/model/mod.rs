//! The self-explaining classifier: a shared trunk feeding a prediction head
//! and a sigmoid explanation head, plus subset extraction and checkpoints.

pub mod checkpoint;
mod network;
mod subset;

pub use checkpoint::{decode as decode_checkpoint, encode as encode_checkpoint, read_checkpoint};
pub use network::{Architecture, Backward, Dense, ForwardPass, Gradients, ModelParams};
pub use subset::{
    compose_masked_input, extract_subset, ExplanationLayout, GroupHead, Grouping, SubsetMask,
};

use crate::error::Result;

/// Lowest-index argmax of `h1(x)` for a single feature vector.
pub fn predict_class(params: &ModelParams, x: &[f64]) -> Result<usize> {
    params.predict_one(x)
}
