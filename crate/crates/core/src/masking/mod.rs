//! Complement assignments for the second propagation: baseline, sampled and
//! adversarial (PGD) masking.
//!
//! Every function here leaves the features in `S` bit-identical to `x`.

mod rng;
mod strategy;

pub use rng::RandomSource;
pub use strategy::{
    BaselineConfig, BaselineValue, MaskingStrategy, Norm, ProbabilisticConfig, RobustConfig,
    SampleDomain, SufficiencyKind,
};

use crate::error::{Error, Result};
use crate::model::{compose_masked_input, ModelParams, SubsetMask};
use crate::numerics::{softmax_ce_loss, Tensor2D};

/// `(x_S; z_S̄)` for a fixed baseline `z`.
pub fn baseline_mask(x: &[f64], subset: &SubsetMask, z: &[f64]) -> Result<Vec<f64>> {
    compose_masked_input(x, subset, z)
}

/// Keeps `S` and draws each complement feature independently from the domain.
pub fn probabilistic_mask(
    x: &[f64],
    subset: &SubsetMask,
    domain: SampleDomain,
    rng: &mut RandomSource,
) -> Result<Vec<f64>> {
    if x.len() != subset.len() {
        return Err(Error::Dimension {
            op: "probabilistic_mask",
            left: (1, x.len()),
            right: (1, subset.len()),
        });
    }
    Ok(x.iter()
        .zip(subset.as_slice())
        .map(|(&xi, &keep)| {
            if keep {
                xi
            } else {
                let u = rng.uniform();
                sample_coordinate(xi, domain, u)
            }
        })
        .collect())
}

/// Maps a uniform draw `u ∈ [0,1)` onto the sampling interval of one feature.
#[inline]
pub(crate) fn sample_coordinate(xi: f64, domain: SampleDomain, u: f64) -> f64 {
    match domain {
        SampleDomain::Full => u,
        SampleDomain::Ball(eps) => {
            let lo = (xi - eps).max(0.0);
            let hi = (xi + eps).min(1.0);
            if hi <= lo {
                lo
            } else {
                lo + (hi - lo) * u
            }
        }
    }
}

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Projects one free coordinate onto the `ε`-ball around `xi`, then onto `[0, 1]`.
#[inline]
fn project(v: f64, xi: f64, cfg: &RobustConfig) -> f64 {
    let v = v.clamp(xi - cfg.epsilon, xi + cfg.epsilon);
    if cfg.clamp {
        v.clamp(0.0, 1.0)
    } else {
        v
    }
}

/// Batched PGD restricted to the complement of each row's subset.
///
/// Starts from a uniform point of the ball (projected onto the domain) and takes
/// `steps` signed-gradient ascent steps on the cross-entropy of `targets`.
pub fn robust_mask_batch(
    params: &ModelParams,
    x: &Tensor2D,
    subsets: &[SubsetMask],
    targets: &[usize],
    cfg: &RobustConfig,
    rng: &mut RandomSource,
) -> Result<Tensor2D> {
    let (rows, n) = x.shape();
    if subsets.len() != rows || targets.len() != rows {
        return Err(Error::Dimension {
            op: "robust_mask_batch",
            left: x.shape(),
            right: (subsets.len(), targets.len()),
        });
    }
    if let Some(s) = subsets.iter().find(|s| s.len() != n) {
        return Err(Error::Dimension {
            op: "robust_mask_batch subset",
            left: (1, n),
            right: (1, s.len()),
        });
    }

    let mut z = x.clone();
    for (r, subset) in subsets.iter().enumerate() {
        let xr = x.row(r);
        let zr = z.row_mut(r);
        for j in 0..n {
            if !subset.contains(j) {
                let start = xr[j] + rng.uniform_in(-cfg.epsilon, cfg.epsilon);
                zr[j] = project(start, xr[j], cfg);
            }
        }
    }
    if subsets.iter().all(|s| s.cardinality() == n) {
        return Ok(z);
    }

    for step in 0..cfg.steps {
        let pass = params.forward_logits(&z)?;
        let loss = softmax_ce_loss(&pass.logits, targets)?;
        let grad = params
            .backward(&pass, Some(&loss.gradient), None, false, true)?
            .input
            .expect("input gradient requested");
        if !grad.is_finite() {
            return Err(Error::Numeric(format!("non-finite input gradient at PGD step {step}")));
        }
        for (r, subset) in subsets.iter().enumerate() {
            let xr = x.row(r);
            let gr = grad.row(r);
            let zr = z.row_mut(r);
            for j in 0..n {
                if !subset.contains(j) {
                    zr[j] = project(zr[j] + cfg.step_size * sign(gr[j]), xr[j], cfg);
                }
            }
        }
    }
    Ok(z)
}

/// Single-instance PGD masking against class `target`.
pub fn robust_mask(
    params: &ModelParams,
    x: &[f64],
    subset: &SubsetMask,
    target: usize,
    cfg: &RobustConfig,
    rng: &mut RandomSource,
) -> Result<Vec<f64>> {
    let out = robust_mask_batch(
        params,
        &Tensor2D::row_vector(x),
        std::slice::from_ref(subset),
        &[target],
        cfg,
        rng,
    )?;
    Ok(out.into_vec())
}

/// Builds one masked input per row according to `strategy`.
///
/// `targets` is only consulted by robust masking (the class whose loss PGD ascends).
pub fn mask_batch(
    strategy: &MaskingStrategy,
    params: &ModelParams,
    x: &Tensor2D,
    subsets: &[SubsetMask],
    targets: &[usize],
    rng: &mut RandomSource,
) -> Result<Tensor2D> {
    match strategy {
        MaskingStrategy::Baseline(b) => {
            let z = b.z.materialize(x.cols())?;
            let mut out = Tensor2D::zeros(x.rows(), x.cols());
            for (r, s) in subsets.iter().enumerate() {
                let row = baseline_mask(x.row(r), s, &z)?;
                out.row_mut(r).copy_from_slice(&row);
            }
            Ok(out)
        }
        MaskingStrategy::Probabilistic(p) => {
            let mut out = Tensor2D::zeros(x.rows(), x.cols());
            for (r, s) in subsets.iter().enumerate() {
                let row = probabilistic_mask(x.row(r), s, p.domain, rng)?;
                out.row_mut(r).copy_from_slice(&row);
            }
            Ok(out)
        }
        MaskingStrategy::Robust(cfg) => robust_mask_batch(params, x, subsets, targets, cfg, rng),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Architecture;

    #[test]
    fn baseline_examples() {
        let s = SubsetMask::from_indices(2, &[1]).unwrap();
        assert_eq!(baseline_mask(&[0.2, 0.8], &s, &[0.0, 0.0]).unwrap(), vec![0.0, 0.8]);
        let x = [0.3, 0.6];
        assert_eq!(baseline_mask(&x, &SubsetMask::full(2), &[0.0, 0.0]).unwrap(), x.to_vec());
    }

    #[test]
    fn probabilistic_full_subset_is_identity() {
        let x = [0.1, 0.2, 0.9];
        let mut rng = RandomSource::new(1);
        let out = probabilistic_mask(&x, &SubsetMask::full(3), SampleDomain::Full, &mut rng).unwrap();
        assert_eq!(out, x.to_vec());
    }

    #[test]
    fn probabilistic_ball_stays_close() {
        let mut rng = RandomSource::new(5);
        let x: Vec<f64> = (0..50).map(|i| i as f64 / 49.0).collect();
        for _ in 0..200 {
            let out =
                probabilistic_mask(&x, &SubsetMask::empty(50), SampleDomain::Ball(0.12), &mut rng)
                    .unwrap();
            for (o, xi) in out.iter().zip(&x) {
                assert!((o - xi).abs() <= 0.12 && (0.0..=1.0).contains(o));
            }
        }
    }

    #[test]
    fn robust_full_subset_is_identity() {
        let params =
            ModelParams::init(Architecture::new(4, 2, vec![3]), &mut RandomSource::new(2)).unwrap();
        let x = [0.1, 0.5, 0.7, 1.0];
        let out = robust_mask(
            &params,
            &x,
            &SubsetMask::full(4),
            0,
            &RobustConfig::default(),
            &mut RandomSource::new(3),
        )
        .unwrap();
        assert_eq!(out, x.to_vec());
    }

    #[test]
    fn sign_of_zero_is_zero() {
        assert_eq!(sign(0.0), 0.0);
        assert_eq!(sign(-0.0), 0.0);
        assert_eq!(sign(-2.0), -1.0);
    }
}
