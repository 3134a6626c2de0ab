//! One-dimensional hyperparameter sweeps.

use serde::{Deserialize, Serialize};

use super::config::{TrainConfig, TrainMode};
use super::train;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::evaluation::{accuracy_pct, faithfulness_under, mean_size_pct, EvalSettings};
use crate::masking::{MaskingStrategy, SampleDomain};

pub const SWEEP_SCHEMA: &str = "sst.sweep/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Xi,
    Epsilon,
    Alpha,
    Tau,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xi" => Ok(SweepAxis::Xi),
            "epsilon" => Ok(SweepAxis::Epsilon),
            "alpha" => Ok(SweepAxis::Alpha),
            "tau" => Ok(SweepAxis::Tau),
            other => Err(Error::Config(format!(
                "unknown sweep axis {other:?} (expected xi, epsilon, alpha or tau)"
            ))),
        }
    }
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Xi => "xi",
            SweepAxis::Epsilon => "epsilon",
            SweepAxis::Alpha => "alpha",
            SweepAxis::Tau => "tau",
        }
    }

    /// Training config and evaluation settings with this axis set to `value`.
    ///
    /// `epsilon` moves both the training mask radius and the matching check;
    /// `alpha` is the PGD step size and needs robust masking.
    pub fn apply(
        self,
        base: &TrainConfig,
        eval: &EvalSettings,
        value: f64,
    ) -> Result<(TrainConfig, EvalSettings)> {
        let mut cfg = base.clone();
        let mut eval = eval.clone();
        match self {
            SweepAxis::Xi => cfg.xi = value,
            SweepAxis::Tau => cfg.tau = value,
            SweepAxis::Epsilon => match &mut cfg.masking {
                MaskingStrategy::Robust(r) => {
                    r.epsilon = value;
                    eval.robust.epsilon = value;
                }
                MaskingStrategy::Probabilistic(p) => {
                    p.domain = SampleDomain::Ball(value);
                    eval.probabilistic.domain = SampleDomain::Ball(value);
                }
                MaskingStrategy::Baseline(_) => {
                    return Err(Error::Config("epsilon sweep needs robust or probabilistic masking".into()))
                }
            },
            SweepAxis::Alpha => match &mut cfg.masking {
                MaskingStrategy::Robust(r) => {
                    r.step_size = value;
                    eval.robust.step_size = value;
                }
                _ => return Err(Error::Config("alpha sweep needs robust masking".into())),
            },
        }
        cfg.validate()?;
        eval.validate()?;
        Ok((cfg, eval))
    }
}

/// Metrics of one sweep value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepMetrics {
    pub accuracy_pct: f64,
    pub faithfulness_pct: f64,
    pub size_pct: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepCell {
    pub value: f64,
    /// The error message when training or evaluation of this cell failed.
    pub result: std::result::Result<SweepMetrics, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub axis: SweepAxis,
    /// Accuracy of the standard-trained twin the gains are measured against.
    pub reference_accuracy_pct: f64,
    /// Sorted by value.
    pub cells: Vec<SweepCell>,
}

impl SweepTable {
    /// CSV with columns `value,acc_gain_pct,faithfulness_pct,size_pct`;
    /// failed cells read `failed`.
    pub fn to_csv(&self) -> String {
        let mut out = format!(
            "# schema={SWEEP_SCHEMA} axis={} reference_accuracy_pct={}\nvalue,acc_gain_pct,faithfulness_pct,size_pct\n",
            self.axis.name(),
            self.reference_accuracy_pct
        );
        for c in &self.cells {
            match &c.result {
                Ok(m) => out.push_str(&format!(
                    "{},{},{},{}\n",
                    c.value,
                    m.accuracy_pct - self.reference_accuracy_pct,
                    m.faithfulness_pct,
                    m.size_pct
                )),
                Err(_) => out.push_str(&format!("{},failed,failed,failed\n", c.value)),
            }
        }
        out
    }
}

fn run_cell(
    train_set: &Dataset,
    test: &Dataset,
    cfg: &TrainConfig,
    eval: &EvalSettings,
) -> Result<SweepMetrics> {
    let (params, _) = train(train_set, cfg)?;
    Ok(SweepMetrics {
        accuracy_pct: accuracy_pct(&params, test)?,
        faithfulness_pct: faithfulness_under(&params, test, eval, cfg.masking.kind())?,
        size_pct: mean_size_pct(&params, test)?,
    })
}

fn sorted(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    if let Some(v) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::Config(format!("sweep value {v} is not finite")));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

fn cells(
    train_set: &Dataset,
    test: &Dataset,
    base: &TrainConfig,
    eval: &EvalSettings,
    axis: SweepAxis,
    values: &[f64],
) -> Result<Vec<SweepCell>> {
    Ok(sorted(values)?
        .into_iter()
        .map(|value| SweepCell {
            value,
            result: axis
                .apply(base, eval, value)
                .and_then(|(cfg, eval)| run_cell(train_set, test, &cfg, &eval))
                .map_err(|e| e.to_string()),
        })
        .collect())
}

/// Trains one model per value and evaluates it with the check matching its
/// training mask. Gains are relative to a standard-trained twin of `base`.
pub fn sweep(
    train_set: &Dataset,
    test: &Dataset,
    base: &TrainConfig,
    eval: &EvalSettings,
    axis: SweepAxis,
    values: &[f64],
) -> Result<SweepTable> {
    let twin = TrainConfig {
        mode: TrainMode::Standard,
        ..base.clone()
    };
    let (reference, _) = train(train_set, &twin)?;
    Ok(SweepTable {
        axis,
        reference_accuracy_pct: accuracy_pct(&reference, test)?,
        cells: cells(train_set, test, base, eval, axis, values)?,
    })
}

/// One row of a cardinality-coefficient sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct XiRow {
    pub xi: f64,
    pub result: std::result::Result<SweepMetrics, String>,
}

/// The faithfulness/size trade-off over `ξ`, sorted by `ξ`.
pub fn sweep_xi(
    train_set: &Dataset,
    test: &Dataset,
    base: &TrainConfig,
    eval: &EvalSettings,
    xis: &[f64],
) -> Result<Vec<XiRow>> {
    Ok(cells(train_set, test, base, eval, SweepAxis::Xi, xis)?
        .into_iter()
        .map(|c| XiRow {
            xi: c.value,
            result: c.result,
        })
        .collect())
}
