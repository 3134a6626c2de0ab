//! Self-explaining feed-forward classifiers trained to emit sufficient-reason
//! subsets alongside their predictions.

pub mod data;
pub mod error;
pub mod evaluation;
pub mod masking;
pub mod model;
pub mod numerics;
pub mod oracle;
pub mod training;

pub use error::{Error, Result};
