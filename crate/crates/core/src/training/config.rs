use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::masking::MaskingStrategy;
use crate::model::{Architecture, GroupHead};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TrainMode {
    /// Dual propagation with faithfulness and cardinality terms.
    #[default]
    Sst,
    /// Plain cross-entropy on the prediction head.
    Standard,
}

/// Backward treatment of the threshold `h2(x) ≥ τ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GradMode {
    /// The mask is a constant in the backward pass.
    #[default]
    Hard,
    /// Identity gradient through the threshold into the explanation scores.
    StraightThrough,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default)]
    pub mode: TrainMode,
    /// Faithfulness coefficient `λ`.
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    /// Cardinality coefficient `ξ`.
    #[serde(default = "default_xi")]
    pub xi: f64,
    /// Selection threshold `τ`.
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_batch")]
    pub batch: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "MaskingStrategy::default_robust")]
    pub masking: MaskingStrategy,
    #[serde(default)]
    pub grad_mode: GradMode,
    /// Global gradient-norm clip; `null` disables clipping.
    #[serde(default = "default_clip")]
    pub clip_norm: Option<f64>,
    /// Fraction of the shuffled training set held out for validation.
    #[serde(default = "default_val_fraction")]
    pub val_fraction: f64,
    #[serde(default = "default_hidden")]
    pub hidden: Vec<usize>,
    #[serde(default)]
    pub group_side: Option<usize>,
    #[serde(default)]
    pub group_head: GroupHead,
    #[serde(default)]
    pub explanation_tap: Option<usize>,
    /// Write wall-clock seconds into the log; when off they are recorded as 0.
    #[serde(default = "default_true")]
    pub record_timing: bool,
}

fn default_lambda() -> f64 {
    1.0
}
fn default_xi() -> f64 {
    1e-7
}
fn default_tau() -> f64 {
    0.5
}
fn default_lr() -> f64 {
    1e-3
}
fn default_batch() -> usize {
    64
}
fn default_epochs() -> usize {
    5
}
fn default_clip() -> Option<f64> {
    Some(10.0)
}
fn default_val_fraction() -> f64 {
    0.1
}
fn default_hidden() -> Vec<usize> {
    vec![128, 64]
}
fn default_true() -> bool {
    true
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            mode: TrainMode::Sst,
            lambda: default_lambda(),
            xi: default_xi(),
            tau: default_tau(),
            lr: default_lr(),
            batch: default_batch(),
            epochs: default_epochs(),
            seed: 0,
            masking: MaskingStrategy::default_robust(),
            grad_mode: GradMode::Hard,
            clip_norm: default_clip(),
            val_fraction: default_val_fraction(),
            hidden: default_hidden(),
            group_side: None,
            group_head: GroupHead::MeanPool,
            explanation_tap: None,
            record_timing: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return bad(format!("lambda must be a non-negative number, got {}", self.lambda));
        }
        if !(self.xi >= 0.0) || !self.xi.is_finite() {
            return bad(format!("xi must be a non-negative number, got {}", self.xi));
        }
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return bad(format!("tau must lie in (0, 1), got {}", self.tau));
        }
        if !(self.lr > 0.0) {
            return bad(format!("learning rate must be positive, got {}", self.lr));
        }
        if self.batch == 0 {
            return bad("batch size must be positive".into());
        }
        if let Some(c) = self.clip_norm {
            if !(c > 0.0) {
                return bad(format!("clip norm must be positive, got {c}"));
            }
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return bad(format!("val_fraction must lie in [0, 1), got {}", self.val_fraction));
        }
        self.masking.validate()
    }

    /// The network shape for a dataset with `inputs` features and `classes` labels.
    pub fn architecture(
        &self,
        inputs: usize,
        classes: usize,
        image_shape: Option<(usize, usize)>,
    ) -> Architecture {
        Architecture {
            inputs,
            classes,
            hidden: self.hidden.clone(),
            image_shape,
            group_side: self.group_side,
            group_head: self.group_head,
            explanation_tap: self.explanation_tap,
            threshold: self.tau,
        }
    }

    /// Whether a step needs the masked second propagation at all.
    pub fn uses_second_pass(&self) -> bool {
        self.mode == TrainMode::Sst && self.lambda > 0.0
    }
}
