use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Values the complement takes under baseline masking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BaselineValue {
    /// The same value for every feature.
    Constant(f64),
    /// One value per feature.
    Vector(Vec<f64>),
}

impl Default for BaselineValue {
    fn default() -> Self {
        BaselineValue::Constant(0.0)
    }
}

impl BaselineValue {
    pub fn materialize(&self, n: usize) -> Result<Vec<f64>> {
        match self {
            BaselineValue::Constant(v) => Ok(vec![*v; n]),
            BaselineValue::Vector(z) if z.len() == n => Ok(z.clone()),
            BaselineValue::Vector(z) => Err(Error::Dimension {
                op: "baseline vector",
                left: (1, n),
                right: (1, z.len()),
            }),
        }
    }
}

/// Support of the probabilistic complement distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleDomain {
    /// Uniform over `[0, 1]`.
    Full,
    /// Uniform over `[x_i - ε, x_i + ε] ∩ [0, 1]`.
    Ball(f64),
}

/// Perturbation norm for robust masking. Only `ℓ∞` is supported.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    #[default]
    Inf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineConfig {
    #[serde(default)]
    pub z: BaselineValue,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbabilisticConfig {
    #[serde(default = "default_domain")]
    pub domain: SampleDomain,
    /// Allowed failure probability `δ`.
    #[serde(default = "default_delta")]
    pub delta: f64,
    /// Samples drawn per sufficiency check.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobustConfig {
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub norm: Norm,
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default = "default_step_size")]
    pub step_size: f64,
    /// Clamp iterates to `[0, 1]` after the ball projection.
    #[serde(default = "default_true")]
    pub clamp: bool,
    /// Independent attacks per check; an instance must survive all of them.
    #[serde(default = "default_restarts")]
    pub restarts: usize,
}

fn default_domain() -> SampleDomain {
    SampleDomain::Ball(0.12)
}
fn default_delta() -> f64 {
    0.01
}
fn default_samples() -> usize {
    100
}
fn default_epsilon() -> f64 {
    0.12
}
fn default_steps() -> usize {
    10
}
fn default_step_size() -> f64 {
    1e-2
}
fn default_true() -> bool {
    true
}
fn default_restarts() -> usize {
    1
}

impl Default for ProbabilisticConfig {
    fn default() -> Self {
        Self {
            domain: default_domain(),
            delta: default_delta(),
            samples: default_samples(),
        }
    }
}

impl Default for RobustConfig {
    fn default() -> Self {
        Self {
            epsilon: default_epsilon(),
            norm: Norm::Inf,
            steps: default_steps(),
            step_size: default_step_size(),
            clamp: true,
            restarts: default_restarts(),
        }
    }
}

/// How the complement `S̄` is filled in for the second propagation and for checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MaskingStrategy {
    Baseline(BaselineConfig),
    Probabilistic(ProbabilisticConfig),
    Robust(RobustConfig),
}

/// The three sufficiency notions, used to label checks and reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SufficiencyKind {
    Baseline,
    Probabilistic,
    Robust,
}

impl SufficiencyKind {
    pub const ALL: [SufficiencyKind; 3] = [
        SufficiencyKind::Baseline,
        SufficiencyKind::Probabilistic,
        SufficiencyKind::Robust,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SufficiencyKind::Baseline => "baseline",
            SufficiencyKind::Probabilistic => "probabilistic",
            SufficiencyKind::Robust => "robust",
        }
    }
}

impl std::fmt::Display for SufficiencyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SufficiencyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(SufficiencyKind::Baseline),
            "probabilistic" => Ok(SufficiencyKind::Probabilistic),
            "robust" => Ok(SufficiencyKind::Robust),
            other => Err(Error::Config(format!(
                "unknown sufficiency check {other:?} (expected baseline, probabilistic or robust)"
            ))),
        }
    }
}

impl MaskingStrategy {
    pub fn baseline_zero() -> Self {
        MaskingStrategy::Baseline(BaselineConfig {
            z: BaselineValue::Constant(0.0),
        })
    }

    pub fn default_probabilistic() -> Self {
        MaskingStrategy::Probabilistic(ProbabilisticConfig::default())
    }

    pub fn default_robust() -> Self {
        MaskingStrategy::Robust(RobustConfig::default())
    }

    pub fn kind(&self) -> SufficiencyKind {
        match self {
            MaskingStrategy::Baseline(_) => SufficiencyKind::Baseline,
            MaskingStrategy::Probabilistic(_) => SufficiencyKind::Probabilistic,
            MaskingStrategy::Robust(_) => SufficiencyKind::Robust,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MaskingStrategy::Baseline(b) => match &b.z {
                BaselineValue::Constant(v) if !v.is_finite() => {
                    Err(Error::Config("baseline value must be finite".into()))
                }
                BaselineValue::Vector(z) if z.iter().any(|v| !v.is_finite()) => {
                    Err(Error::Config("baseline vector must be finite".into()))
                }
                _ => Ok(()),
            },
            MaskingStrategy::Probabilistic(p) => {
                if !(0.0..1.0).contains(&p.delta) {
                    return Err(Error::Config(format!("delta must lie in [0, 1), got {}", p.delta)));
                }
                if p.samples == 0 {
                    return Err(Error::Config("probabilistic check needs at least one sample".into()));
                }
                if let SampleDomain::Ball(eps) = p.domain {
                    if !(eps > 0.0) {
                        return Err(Error::Config(format!("ball radius must be positive, got {eps}")));
                    }
                }
                Ok(())
            }
            MaskingStrategy::Robust(r) => {
                if !(r.epsilon > 0.0) {
                    return Err(Error::Config(format!("epsilon must be positive, got {}", r.epsilon)));
                }
                if r.steps == 0 {
                    return Err(Error::Config("robust masking needs at least one step".into()));
                }
                if !(r.step_size > 0.0) {
                    return Err(Error::Config(format!(
                        "step size must be positive, got {}",
                        r.step_size
                    )));
                }
                if r.restarts == 0 {
                    return Err(Error::Config("robust check needs at least one restart".into()));
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_forms() {
        let s: MaskingStrategy = serde_json::from_str(r#"{"kind":"baseline"}"#).unwrap();
        assert_eq!(s, MaskingStrategy::baseline_zero());
        let s: MaskingStrategy = serde_json::from_str(r#"{"kind":"robust"}"#).unwrap();
        assert_eq!(s, MaskingStrategy::default_robust());
        let s: MaskingStrategy =
            serde_json::from_str(r#"{"kind":"probabilistic","domain":"full","samples":5}"#).unwrap();
        match s {
            MaskingStrategy::Probabilistic(p) => {
                assert_eq!(p.domain, SampleDomain::Full);
                assert_eq!(p.samples, 5);
            }
            _ => panic!("wrong variant"),
        }
        let s: MaskingStrategy =
            serde_json::from_str(r#"{"kind":"baseline","z":[0.5,0.25]}"#).unwrap();
        assert_eq!(s.kind(), SufficiencyKind::Baseline);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<MaskingStrategy>(r#"{"kind":"robust","eps":0.1}"#).is_err());
        assert!(serde_json::from_str::<MaskingStrategy>(r#"{"kind":"robust","norm":"l2"}"#).is_err());
        assert!(serde_json::from_str::<MaskingStrategy>(r#"{"kind":"other"}"#).is_err());
    }

    #[test]
    fn validation() {
        let mut r = RobustConfig::default();
        r.steps = 0;
        assert!(MaskingStrategy::Robust(r).validate().is_err());
        let mut p = ProbabilisticConfig::default();
        p.delta = 1.0;
        assert!(MaskingStrategy::Probabilistic(p).validate().is_err());
        assert!(MaskingStrategy::default_robust().validate().is_ok());
        assert!(BaselineValue::Vector(vec![0.0; 2]).materialize(3).is_err());
    }
}
