//! Reference explainers: greedy backward elimination and an exhaustive
//! minimum-sufficient-reason search for tiny inputs.

use itertools::Itertools;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::required_hits;
use crate::masking::{
    baseline_mask, robust_mask_batch, MaskingStrategy, RandomSource, SampleDomain,
};
use crate::model::{ModelParams, SubsetMask};
use crate::numerics::{softmax_ce_loss, Tensor2D};

/// Hard ceiling on brute-force feature counts.
pub const MAX_ENUMERATION_FEATURES: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub check: MaskingStrategy,
    /// Largest subset size the search may return.
    #[serde(default)]
    pub budget: Option<usize>,
    #[serde(default = "default_max_n")]
    pub max_n: usize,
}

fn default_max_n() -> usize {
    20
}

impl OracleConfig {
    pub fn new(check: MaskingStrategy) -> Self {
        Self {
            check,
            budget: None,
            max_n: default_max_n(),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.max_n > MAX_ENUMERATION_FEATURES {
            return Err(Error::Config(format!(
                "max_n {} exceeds the enumeration ceiling {MAX_ENUMERATION_FEATURES}",
                self.max_n
            )));
        }
        if let Some(k) = self.budget {
            if k > n {
                return Err(Error::Config(format!("budget {k} exceeds the feature count {n}")));
            }
        }
        self.check.validate()
    }
}

enum Bank {
    Baseline(Vec<f64>),
    /// Uniform draws, one row per sample, mapped into the domain per subset.
    Probabilistic {
        draws: Vec<Vec<f64>>,
        domain: SampleDomain,
        need: usize,
    },
    Robust { seed: u64 },
}

/// Sufficiency test for one instance with all randomness frozen up front, so
/// repeated queries on the same subset always agree.
pub struct SufficiencyChecker<'a> {
    params: &'a ModelParams,
    x: Vec<f64>,
    target: usize,
    check: MaskingStrategy,
    bank: Bank,
}

impl<'a> SufficiencyChecker<'a> {
    pub fn new(
        params: &'a ModelParams,
        x: &[f64],
        check: &MaskingStrategy,
        rng: &mut RandomSource,
    ) -> Result<Self> {
        check.validate()?;
        if x.len() != params.inputs() {
            return Err(Error::Dimension {
                op: "sufficiency check",
                left: (1, params.inputs()),
                right: (1, x.len()),
            });
        }
        let target = params.predict_one(x)?;
        let bank = match check {
            MaskingStrategy::Baseline(b) => Bank::Baseline(b.z.materialize(x.len())?),
            MaskingStrategy::Probabilistic(p) => Bank::Probabilistic {
                draws: (0..p.samples)
                    .map(|_| (0..x.len()).map(|_| rng.uniform()).collect())
                    .collect(),
                domain: p.domain,
                need: required_hits(p),
            },
            MaskingStrategy::Robust(_) => Bank::Robust {
                seed: rng.next_u64(),
            },
        };
        Ok(Self {
            params,
            x: x.to_vec(),
            target,
            check: check.clone(),
            bank,
        })
    }

    /// The model's prediction on the unmasked instance.
    pub fn target(&self) -> usize {
        self.target
    }

    pub fn features(&self) -> usize {
        self.x.len()
    }

    pub fn is_sufficient(&self, subset: &SubsetMask) -> Result<bool> {
        if subset.len() != self.x.len() {
            return Err(Error::Dimension {
                op: "sufficiency check subset",
                left: (1, self.x.len()),
                right: (1, subset.len()),
            });
        }
        match &self.bank {
            Bank::Baseline(z) => {
                Ok(self.params.predict_one(&baseline_mask(&self.x, subset, z)?)? == self.target)
            }
            Bank::Probabilistic { draws, domain, need } => {
                let rows: Vec<Vec<f64>> = draws
                    .iter()
                    .map(|u| {
                        self.x
                            .iter()
                            .zip(u)
                            .enumerate()
                            .map(|(j, (&xi, &uj))| {
                                if subset.contains(j) {
                                    xi
                                } else {
                                    crate::masking::sample_coordinate(xi, *domain, uj)
                                }
                            })
                            .collect()
                    })
                    .collect();
                let pred = self.params.predict(&Tensor2D::from_rows(&rows))?;
                Ok(pred.iter().filter(|&&p| p == self.target).count() >= *need)
            }
            Bank::Robust { seed } => {
                let MaskingStrategy::Robust(cfg) = &self.check else {
                    unreachable!("robust bank implies robust check")
                };
                let mut rng = RandomSource::new(*seed);
                let x = Tensor2D::row_vector(&self.x);
                for _ in 0..cfg.restarts.max(1) {
                    let z = robust_mask_batch(
                        self.params,
                        &x,
                        std::slice::from_ref(subset),
                        &[self.target],
                        cfg,
                        &mut rng,
                    )?;
                    if self.params.predict(&z)?[0] != self.target {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
        }
    }
}

/// `|∂CE(h1(x), ŷ)/∂x_i|` with `ŷ` the predicted class.
pub fn saliency(params: &ModelParams, x: &[f64]) -> Result<Vec<f64>> {
    let xt = Tensor2D::row_vector(x);
    let pass = params.forward_logits(&xt)?;
    let pred = pass.predictions();
    let loss = softmax_ce_loss(&pass.logits, &pred)?;
    let grad = params
        .backward(&pass, Some(&loss.gradient), None, false, true)?
        .input
        .expect("input gradient requested");
    Ok(grad.row(0).iter().map(|g| g.abs()).collect())
}

/// Backward elimination from the full set, visiting features by descending
/// saliency (ties by index) and dropping each one whose removal keeps the
/// subset sufficient.
pub fn greedy_sufficient_reason(
    params: &ModelParams,
    x: &[f64],
    check: &MaskingStrategy,
    rng: &mut RandomSource,
) -> Result<SubsetMask> {
    let checker = SufficiencyChecker::new(params, x, check, rng)?;
    greedy_with(&checker, &saliency(params, x)?)
}

pub fn greedy_with(checker: &SufficiencyChecker<'_>, saliency: &[f64]) -> Result<SubsetMask> {
    let n = checker.features();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| saliency[b].total_cmp(&saliency[a]).then(a.cmp(&b)));
    let mut subset = SubsetMask::full(n);
    for i in order {
        subset.set(i, false);
        if !checker.is_sufficient(&subset)? {
            subset.set(i, true);
        }
    }
    Ok(subset)
}

/// Smallest sufficient subset, first in lexicographic order within its size.
///
/// `None` means no subset of size at most the budget passes.
pub fn brute_force_msr(
    params: &ModelParams,
    x: &[f64],
    config: &OracleConfig,
    rng: &mut RandomSource,
) -> Result<Option<SubsetMask>> {
    let n = x.len();
    config.validate(n)?;
    if n > config.max_n {
        return Err(Error::Capacity { n, max: config.max_n });
    }
    let checker = SufficiencyChecker::new(params, x, &config.check, rng)?;
    brute_force_with(&checker, config.budget.unwrap_or(n))
}

pub fn brute_force_with(checker: &SufficiencyChecker<'_>, budget: usize) -> Result<Option<SubsetMask>> {
    let n = checker.features();
    for size in 0..=budget.min(n) {
        for combo in (0..n).combinations(size) {
            let subset = SubsetMask::from_indices(n, &combo)?;
            if checker.is_sufficient(&subset)? {
                return Ok(Some(subset));
            }
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Architecture;

    #[test]
    fn capacity_and_budget_limits() {
        let params = ModelParams::zeros(Architecture::new(25, 2, vec![])).unwrap();
        let cfg = OracleConfig::new(MaskingStrategy::baseline_zero());
        let err = brute_force_msr(&params, &[0.5; 25], &cfg, &mut RandomSource::new(0)).unwrap_err();
        assert!(matches!(err, Error::Capacity { n: 25, max: 20 }));
        let bad = OracleConfig {
            max_n: 30,
            ..cfg.clone()
        };
        assert!(bad.validate(3).is_err());
        let over = OracleConfig {
            budget: Some(4),
            ..cfg
        };
        assert!(over.validate(3).is_err());
    }

    #[test]
    fn constant_model_needs_nothing() {
        let params = ModelParams::zeros(Architecture::new(4, 2, vec![3])).unwrap();
        let x = [0.2, 0.9, 0.4, 0.7];
        let cfg = OracleConfig::new(MaskingStrategy::baseline_zero());
        let m = brute_force_msr(&params, &x, &cfg, &mut RandomSource::new(1)).unwrap().unwrap();
        assert_eq!(m.cardinality(), 0);
        let g = greedy_sufficient_reason(&params, &x, &cfg.check, &mut RandomSource::new(1)).unwrap();
        assert_eq!(g.cardinality(), 0);
    }
}
