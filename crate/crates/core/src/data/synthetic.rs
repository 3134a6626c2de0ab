//! Binary tasks whose label depends on a known subset of the features.

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::masking::RandomSource;
use crate::numerics::Tensor2D;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticRule {
    /// Class 1 iff the mean of the support features is at least 0.5.
    #[default]
    Threshold,
    /// XOR of the bits `x_i ≥ 0.5` over the support.
    Parity,
}

impl SyntheticRule {
    pub fn label(self, support_values: impl Iterator<Item = f64>) -> usize {
        match self {
            SyntheticRule::Threshold => {
                let (sum, k) = support_values.fold((0.0, 0usize), |(s, k), v| (s + v, k + 1));
                usize::from(sum / k as f64 >= 0.5)
            }
            SyntheticRule::Parity => support_values.filter(|&v| v >= 0.5).count() % 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n: usize,
    pub support: Vec<usize>,
    #[serde(default)]
    pub rule: SyntheticRule,
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.support.is_empty() {
            return Err(Error::Config("synthetic support must not be empty".into()));
        }
        if let Some(&i) = self.support.iter().find(|&&i| i >= self.n) {
            return Err(Error::Config(format!(
                "support index {i} outside {} features",
                self.n
            )));
        }
        let mut s = self.support.clone();
        s.sort_unstable();
        s.dedup();
        if s.len() != self.support.len() {
            return Err(Error::Config("support indices must be distinct".into()));
        }
        Ok(())
    }

    pub fn label_of(&self, x: &[f64]) -> usize {
        self.rule.label(self.support.iter().map(|&i| x[i]))
    }
}

/// Features i.i.d. uniform on `[0, 1)`; labels from `spec.rule` over the support.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = RandomSource::new(spec.seed);
    let data: Vec<f64> = (0..spec.count * spec.n).map(|_| rng.uniform()).collect();
    let features = Tensor2D::from_vec(spec.count, spec.n, data)?;
    let labels = features.iter_rows().map(|row| spec.label_of(row)).collect();
    Dataset::new(
        format!("synthetic-{:?}-{}", spec.rule, spec.n).to_lowercase(),
        features,
        labels,
        2,
        None,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(support: Vec<usize>, rule: SyntheticRule) -> SyntheticSpec {
        SyntheticSpec {
            n: 6,
            support,
            rule,
            count: 500,
            seed: 4,
        }
    }

    #[test]
    fn single_feature_threshold() {
        let ds = gen_synthetic(&spec(vec![0], SyntheticRule::Threshold)).unwrap();
        for i in 0..ds.len() {
            assert_eq!(ds.labels()[i], usize::from(ds.x(i)[0] >= 0.5));
        }
    }

    #[test]
    fn reproducible() {
        let s = spec(vec![1, 3], SyntheticRule::Parity);
        assert_eq!(gen_synthetic(&s).unwrap(), gen_synthetic(&s).unwrap());
    }

    #[test]
    fn empty_support_rejected() {
        assert!(matches!(
            gen_synthetic(&spec(vec![], SyntheticRule::Threshold)),
            Err(Error::Config(_))
        ));
        assert!(gen_synthetic(&spec(vec![6], SyntheticRule::Threshold)).is_err());
        assert!(gen_synthetic(&spec(vec![1, 1], SyntheticRule::Threshold)).is_err());
    }

    #[test]
    fn parity_rule() {
        assert_eq!(SyntheticRule::Parity.label([0.9, 0.1, 0.7].into_iter()), 0);
        assert_eq!(SyntheticRule::Parity.label([0.9, 0.1, 0.2].into_iter()), 1);
        assert_eq!(SyntheticRule::Threshold.label([0.5, 0.5].into_iter()), 1);
    }
}
