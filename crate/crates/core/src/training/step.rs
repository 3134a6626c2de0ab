//! One optimisation step of dual-propagation training.

use super::config::{GradMode, TrainConfig, TrainMode};
use super::optim::Adam;
use crate::error::{Error, Result};
use crate::masking::{mask_batch, MaskingStrategy, RandomSource};
use crate::model::{ExplanationLayout, GroupHead, Gradients, ModelParams, SubsetMask};
use crate::numerics::{l1_loss, softmax_ce_loss, Tensor2D};

/// The three loss terms and their weighted sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LossComponents {
    pub pred: f64,
    pub faith: f64,
    pub card: f64,
    pub combined: f64,
}

/// Loss, gradient and by-products of one batch evaluation.
#[derive(Debug, Clone)]
pub struct Objective {
    pub losses: LossComponents,
    pub grads: Gradients,
    /// First-pass predictions, one per row.
    pub predictions: Vec<usize>,
    /// Subsets extracted from the first pass (empty in standard mode).
    pub subsets: Vec<SubsetMask>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub losses: LossComponents,
    pub correct: usize,
    pub rows: usize,
    pub mean_size_pct: f64,
}

fn finite(term: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Numeric(format!("{term} loss is not finite ({v})")))
    }
}

/// Cross-entropy on the prediction head only.
pub fn standard_objective(params: &ModelParams, x: &Tensor2D, t: &[usize]) -> Result<Objective> {
    let pass = params.forward_logits(x)?;
    let pred = softmax_ce_loss(&pass.logits, t)?;
    finite("prediction", pred.value)?;
    let grads = params
        .backward(&pass, Some(&pred.gradient), None, true, false)?
        .params
        .expect("parameter gradients requested");
    Ok(Objective {
        losses: LossComponents {
            pred: pred.value,
            combined: pred.value,
            ..LossComponents::default()
        },
        grads,
        predictions: pass.predictions(),
        subsets: Vec::new(),
    })
}

/// Masked second input plus the complement values each feature would take
/// if it were dropped from the subset (needed by the straight-through gradient).
fn masked_inputs(
    strategy: &MaskingStrategy,
    params: &ModelParams,
    x: &Tensor2D,
    subsets: &[SubsetMask],
    labels: &[usize],
    want_complement: bool,
    rng: &mut RandomSource,
) -> Result<(Tensor2D, Option<Tensor2D>)> {
    if !want_complement {
        return Ok((mask_batch(strategy, params, x, subsets, labels, rng)?, None));
    }
    match strategy {
        MaskingStrategy::Baseline(b) => {
            let z = b.z.materialize(x.cols())?;
            let masked = mask_batch(strategy, params, x, subsets, labels, rng)?;
            let mut zc = Tensor2D::zeros(x.rows(), x.cols());
            for r in 0..x.rows() {
                zc.row_mut(r).copy_from_slice(&z);
            }
            Ok((masked, Some(zc)))
        }
        MaskingStrategy::Probabilistic(p) => {
            let mut zc = Tensor2D::zeros(x.rows(), x.cols());
            for r in 0..x.rows() {
                let xr = x.row(r).to_vec();
                for (j, v) in zc.row_mut(r).iter_mut().enumerate() {
                    *v = crate::masking::sample_coordinate(xr[j], p.domain, rng.uniform());
                }
            }
            let mut masked = zc.clone();
            for (r, s) in subsets.iter().enumerate() {
                let xr = x.row(r);
                for (j, v) in masked.row_mut(r).iter_mut().enumerate() {
                    if s.contains(j) {
                        *v = xr[j];
                    }
                }
            }
            Ok((masked, Some(zc)))
        }
        MaskingStrategy::Robust(_) => {
            // Features inside S were never attacked, so their complement value is x itself.
            let masked = mask_batch(strategy, params, x, subsets, labels, rng)?;
            let zc = masked.clone();
            Ok((masked, Some(zc)))
        }
    }
}

/// Straight-through gradient on the explanation scores.
///
/// With `masked = m ⊙ x + (1 − m) ⊙ z` and `∂m/∂s := 1`, each feature
/// contributes `∂L/∂masked_j · (x_j − z_j)` to the score(s) it depends on.
fn straight_through_scores(
    layout: &ExplanationLayout,
    d_masked: &Tensor2D,
    x: &Tensor2D,
    complement: &Tensor2D,
    score_width: usize,
) -> Tensor2D {
    let mut out = Tensor2D::zeros(x.rows(), score_width);
    for r in 0..x.rows() {
        let (dm, xr, zr) = (d_masked.row(r), x.row(r), complement.row(r));
        let o = out.row_mut(r);
        match layout {
            ExplanationLayout::PerFeature => {
                for j in 0..xr.len() {
                    o[j] = dm[j] * (xr[j] - zr[j]);
                }
            }
            ExplanationLayout::Grouped { grouping, head } => {
                for g in 0..grouping.count() {
                    let members = grouping.members(g);
                    let total: f64 = members.iter().map(|&j| dm[j] * (xr[j] - zr[j])).sum();
                    match head {
                        GroupHead::PerGroup => o[g] = total,
                        GroupHead::MeanPool => {
                            let share = total / members.len() as f64;
                            for &j in members {
                                o[j] = share;
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

/// Combined loss `L_pred + λ·L_faith + ξ·L_card` and its parameter gradient.
///
/// The faithfulness target is the first pass's argmax, held constant.
pub fn sst_objective(
    params: &ModelParams,
    x: &Tensor2D,
    t: &[usize],
    cfg: &TrainConfig,
    rng: &mut RandomSource,
) -> Result<Objective> {
    if cfg.mode == TrainMode::Standard {
        return standard_objective(params, x, t);
    }
    let pass1 = params.forward(x)?;
    let scores = pass1.scores.as_ref().expect("full forward carries scores");
    let pred = softmax_ce_loss(&pass1.logits, t)?;
    let card = l1_loss(scores);
    finite("prediction", pred.value)?;
    finite("cardinality", card.value)?;
    let predictions = pass1.predictions();
    let subsets = params.subsets_from_scores(scores);

    let mut faith_value = 0.0;
    let mut grads2: Option<Gradients> = None;
    let mut d_scores: Option<Tensor2D> = None;
    if cfg.xi > 0.0 {
        let mut g = card.gradient.clone();
        g.scale(cfg.xi);
        d_scores = Some(g);
    }

    if cfg.uses_second_pass() {
        let ste = cfg.grad_mode == GradMode::StraightThrough;
        let (masked, complement) =
            masked_inputs(&cfg.masking, params, x, &subsets, t, ste, rng)?;
        let pass2 = params.forward_logits(&masked)?;
        let faith = softmax_ce_loss(&pass2.logits, &predictions)?;
        faith_value = finite("faithfulness", faith.value)?;
        let mut d_logits2 = faith.gradient;
        d_logits2.scale(cfg.lambda);
        let back = params.backward(&pass2, Some(&d_logits2), None, true, ste)?;
        grads2 = back.params;
        if let (Some(d_masked), Some(zc)) = (back.input, complement) {
            let ste_grad =
                straight_through_scores(params.layout(), &d_masked, x, &zc, scores.cols());
            match d_scores.as_mut() {
                Some(ds) => ds.add_scaled(&ste_grad, 1.0)?,
                None => d_scores = Some(ste_grad),
            }
        }
    }

    let mut grads = params
        .backward(&pass1, Some(&pred.gradient), d_scores.as_ref(), true, false)?
        .params
        .expect("parameter gradients requested");
    if let Some(g2) = grads2 {
        grads.add_assign(&g2);
    }

    let combined = pred.value + cfg.lambda * faith_value + cfg.xi * card.value;
    Ok(Objective {
        losses: LossComponents {
            pred: pred.value,
            faith: faith_value,
            card: card.value,
            combined: finite("combined", combined)?,
        },
        grads,
        predictions,
        subsets,
    })
}

/// Evaluates the objective on one batch and applies one clipped Adam update.
pub fn sst_step(
    params: &mut ModelParams,
    optimizer: &mut Adam,
    x: &Tensor2D,
    t: &[usize],
    cfg: &TrainConfig,
    rng: &mut RandomSource,
) -> Result<StepOutcome> {
    let Objective {
        losses,
        mut grads,
        predictions,
        subsets,
    } = sst_objective(params, x, t, cfg, rng)?;
    if !grads.is_finite() {
        return Err(Error::Numeric("gradient contains non-finite entries".into()));
    }
    if let Some(max) = cfg.clip_norm {
        let norm = grads.global_norm();
        if norm > max {
            grads.scale(max / norm);
        }
    }
    optimizer.step(params, &grads);
    let correct = predictions.iter().zip(t).filter(|(p, t)| p == t).count();
    let mean_size_pct = if subsets.is_empty() {
        0.0
    } else {
        subsets.iter().map(|s| s.size_pct()).sum::<f64>() / subsets.len() as f64
    };
    Ok(StepOutcome {
        losses,
        correct,
        rows: t.len(),
        mean_size_pct,
    })
}
