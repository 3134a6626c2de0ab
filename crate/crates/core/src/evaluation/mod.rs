//! Faithfulness, explanation size, accuracy and timing metrics, plus the
//! cross-mask generalization matrix.

mod report;

pub use report::{CrossMatrix, FaithfulnessByKind, MetricsReport, METRICS_SCHEMA, CROSS_SCHEMA};

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::masking::{
    mask_batch, robust_mask_batch, BaselineConfig, MaskingStrategy, ProbabilisticConfig,
    RandomSource, RobustConfig, SufficiencyKind,
};
use crate::model::{ModelParams, SubsetMask};
use crate::numerics::Tensor2D;

const CHUNK: usize = 500;

/// Where the subsets under test come from.
#[derive(Debug, Clone, Copy)]
pub enum SubsetSource<'a> {
    /// The model's own explanation head thresholded at its `τ`.
    Model,
    /// One externally supplied subset per test instance.
    External(&'a [SubsetMask]),
}

/// Settings of the three sufficiency checks used at evaluation time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSettings {
    #[serde(default = "default_baseline")]
    pub baseline: BaselineConfig,
    #[serde(default)]
    pub probabilistic: ProbabilisticConfig,
    #[serde(default)]
    pub robust: RobustConfig,
    #[serde(default)]
    pub seed: u64,
    /// Measure per-instance explanation time; reported as 0 when off.
    #[serde(default = "default_true")]
    pub record_timing: bool,
}

fn default_baseline() -> BaselineConfig {
    BaselineConfig {
        z: Default::default(),
    }
}

fn default_true() -> bool {
    true
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            baseline: default_baseline(),
            probabilistic: ProbabilisticConfig::default(),
            robust: RobustConfig::default(),
            seed: 0,
            record_timing: true,
        }
    }
}

impl EvalSettings {
    pub fn check(&self, kind: SufficiencyKind) -> MaskingStrategy {
        match kind {
            SufficiencyKind::Baseline => MaskingStrategy::Baseline(self.baseline.clone()),
            SufficiencyKind::Probabilistic => {
                MaskingStrategy::Probabilistic(self.probabilistic.clone())
            }
            SufficiencyKind::Robust => MaskingStrategy::Robust(self.robust.clone()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for kind in SufficiencyKind::ALL {
            self.check(kind).validate()?;
        }
        Ok(())
    }
}

fn chunks(len: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..len)
        .step_by(CHUNK)
        .map(move |s| (s..(s + CHUNK).min(len)).collect())
}

/// Percentage of test instances whose prediction matches the label.
pub fn accuracy_pct(params: &ModelParams, test: &Dataset) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::Config("accuracy of an empty test set".into()));
    }
    let mut correct = 0;
    for idx in chunks(test.len()) {
        let pred = params.predict(&test.features().select_rows(&idx))?;
        correct += idx.iter().zip(&pred).filter(|(&i, &p)| test.labels()[i] == p).count();
    }
    Ok(100.0 * correct as f64 / test.len() as f64)
}

/// The model's subsets for every test instance.
pub fn model_subsets(params: &ModelParams, test: &Dataset) -> Result<Vec<SubsetMask>> {
    let mut out = Vec::with_capacity(test.len());
    for idx in chunks(test.len()) {
        out.extend(params.explain(&test.features().select_rows(&idx))?.1);
    }
    Ok(out)
}

/// Mean `|S|/n × 100` over the test set.
pub fn mean_size_pct(params: &ModelParams, test: &Dataset) -> Result<f64> {
    if test.is_empty() {
        return Ok(0.0);
    }
    let subsets = model_subsets(params, test)?;
    Ok(subsets.iter().map(SubsetMask::size_pct).sum::<f64>() / subsets.len() as f64)
}

/// Mean subset size and mean per-instance wall time of forward plus extraction.
///
/// Time is reported as 0 when `timing` is off, keeping artifacts reproducible.
pub fn eval_size_and_time(params: &ModelParams, test: &Dataset, timing: bool) -> Result<(f64, f64)> {
    let size = mean_size_pct(params, test)?;
    if !timing || test.is_empty() {
        return Ok((size, 0.0));
    }
    let mut total = 0.0;
    for i in 0..test.len() {
        let x = Tensor2D::row_vector(test.x(i));
        let started = Instant::now();
        let (_, masks) = params.explain(&x)?;
        total += started.elapsed().as_secs_f64();
        std::hint::black_box(masks);
    }
    Ok((size, total / test.len() as f64))
}

/// Per-instance sufficiency verdicts of the subsets under `check`.
pub fn faithful_flags(
    params: &ModelParams,
    test: &Dataset,
    source: SubsetSource<'_>,
    check: &MaskingStrategy,
    rng: &mut RandomSource,
) -> Result<Vec<bool>> {
    check.validate()?;
    let owned;
    let subsets: &[SubsetMask] = match source {
        SubsetSource::Model => {
            owned = model_subsets(params, test)?;
            &owned
        }
        SubsetSource::External(s) => {
            if s.len() != test.len() {
                return Err(Error::Consistency(format!(
                    "{} external subsets for {} test instances",
                    s.len(),
                    test.len()
                )));
            }
            if let Some(bad) = s.iter().find(|m| m.len() != test.features_per_example()) {
                return Err(Error::Dimension {
                    op: "external subset",
                    left: (1, test.features_per_example()),
                    right: (1, bad.len()),
                });
            }
            s
        }
    };

    let mut flags = Vec::with_capacity(test.len());
    for idx in chunks(test.len()) {
        let x = test.features().select_rows(&idx);
        let s: Vec<SubsetMask> = idx.iter().map(|&i| subsets[i].clone()).collect();
        let pred = params.predict(&x)?;
        flags.extend(chunk_flags(params, &x, &s, &pred, check, rng)?);
    }
    Ok(flags)
}

fn chunk_flags(
    params: &ModelParams,
    x: &Tensor2D,
    subsets: &[SubsetMask],
    pred: &[usize],
    check: &MaskingStrategy,
    rng: &mut RandomSource,
) -> Result<Vec<bool>> {
    let preserved = |masked: &Tensor2D| -> Result<Vec<bool>> {
        Ok(params
            .predict(masked)?
            .iter()
            .zip(pred)
            .map(|(a, b)| a == b)
            .collect())
    };
    match check {
        MaskingStrategy::Baseline(_) => preserved(&mask_batch(check, params, x, subsets, pred, rng)?),
        MaskingStrategy::Probabilistic(p) => {
            let need = required_hits(p);
            let mut hits = vec![0usize; x.rows()];
            for _ in 0..p.samples {
                let masked = mask_batch(check, params, x, subsets, pred, rng)?;
                for (h, ok) in hits.iter_mut().zip(preserved(&masked)?) {
                    *h += ok as usize;
                }
            }
            Ok(hits.into_iter().map(|h| h >= need).collect())
        }
        MaskingStrategy::Robust(r) => {
            let mut flags = vec![true; x.rows()];
            for _ in 0..r.restarts.max(1) {
                let masked = robust_mask_batch(params, x, subsets, pred, r, rng)?;
                for (f, ok) in flags.iter_mut().zip(preserved(&masked)?) {
                    *f &= ok;
                }
            }
            Ok(flags)
        }
    }
}

/// Minimum number of preserving samples out of `m` for probabilistic sufficiency.
pub fn required_hits(p: &ProbabilisticConfig) -> usize {
    ((1.0 - p.delta) * p.samples as f64 - 1e-9).ceil().max(0.0) as usize
}

/// Percentage of test instances whose subset is sufficient under `check`.
pub fn eval_faithfulness(
    params: &ModelParams,
    test: &Dataset,
    source: SubsetSource<'_>,
    check: &MaskingStrategy,
    rng: &mut RandomSource,
) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::Config("faithfulness of an empty test set".into()));
    }
    let flags = faithful_flags(params, test, source, check, rng)?;
    Ok(100.0 * flags.iter().filter(|&&f| f).count() as f64 / flags.len() as f64)
}

/// Faithfulness of `params` under the check of `kind`, seeded from `settings`.
pub fn faithfulness_under(
    params: &ModelParams,
    test: &Dataset,
    settings: &EvalSettings,
    kind: SufficiencyKind,
) -> Result<f64> {
    eval_faithfulness(
        params,
        test,
        SubsetSource::Model,
        &settings.check(kind),
        &mut RandomSource::new(settings.seed),
    )
}

/// Faithfulness of each labelled model under each check.
///
/// Every cell draws from a fresh stream seeded by `settings.seed`, so a
/// diagonal cell equals the corresponding direct evaluation.
pub fn eval_cross(
    models: &[(String, &ModelParams)],
    test: &Dataset,
    checks: &[SufficiencyKind],
    settings: &EvalSettings,
) -> Result<CrossMatrix> {
    if models.is_empty() || checks.is_empty() {
        return Err(Error::Config("cross matrix needs at least one model and one check".into()));
    }
    let cells = models
        .iter()
        .map(|(_, params)| {
            checks
                .iter()
                .map(|&kind| faithfulness_under(params, test, settings, kind).map_err(|e| e.to_string()))
                .collect()
        })
        .collect();
    Ok(CrossMatrix {
        models: models.iter().map(|(name, _)| name.clone()).collect(),
        checks: checks.to_vec(),
        cells,
    })
}

/// Full metric suite for one model.
///
/// `reference_accuracy` is the accuracy of a comparison model (for example a
/// standard-trained twin); the gain is reported relative to it.
pub fn evaluate(
    params: &ModelParams,
    test: &Dataset,
    settings: &EvalSettings,
    kinds: &[SufficiencyKind],
    reference_accuracy: Option<f64>,
) -> Result<MetricsReport> {
    settings.validate()?;
    let accuracy = accuracy_pct(params, test)?;
    let (size, seconds) = eval_size_and_time(params, test, settings.record_timing)?;
    let mut faith = FaithfulnessByKind::default();
    for &kind in kinds {
        faith.set(kind, faithfulness_under(params, test, settings, kind)?);
    }
    Ok(MetricsReport {
        schema: METRICS_SCHEMA.to_string(),
        dataset: test.name.clone(),
        instances: test.len(),
        accuracy_pct: accuracy,
        accuracy_gain_pct: reference_accuracy.map(|r| accuracy - r),
        mean_size_pct: size,
        mean_explain_seconds: seconds,
        faithfulness: faith,
        threshold: params.threshold(),
        checks: settings.clone(),
    })
}
