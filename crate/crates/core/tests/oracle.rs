use itertools::Itertools;
use sst_core::masking::{MaskingStrategy, ProbabilisticConfig, RandomSource, SampleDomain};
use sst_core::model::{Architecture, ModelParams, SubsetMask};
use sst_core::numerics::Tensor2D;
use sst_core::oracle::*;

/// Two-class linear net whose class-1 margin is `Σ w_i x_i + bias`.
fn margin_net(w: &[f64], bias: f64) -> ModelParams {
    let mut p = ModelParams::zeros(Architecture::new(w.len(), 2, vec![])).unwrap();
    let rows: Vec<[f64; 2]> = w.iter().map(|&wi| [0.0, wi]).collect();
    p.prediction_head_mut().w = Tensor2D::from_rows(&rows);
    p.prediction_head_mut().b = vec![0.0, bias];
    p
}

fn baseline() -> OracleConfig {
    OracleConfig::new(MaskingStrategy::baseline_zero())
}

#[test]
fn and_needs_both_features() {
    let p = margin_net(&[1.0, 1.0], -1.5);
    let m = brute_force_msr(&p, &[1.0, 1.0], &baseline(), &mut RandomSource::new(0)).unwrap().unwrap();
    assert_eq!(m.indices(), vec![0, 1]);
}

#[test]
fn or_needs_one_feature_first_lexicographically() {
    let p = margin_net(&[1.0, 1.0, 1.0], -0.5);
    let m = brute_force_msr(&p, &[1.0, 1.0, 1.0], &baseline(), &mut RandomSource::new(0)).unwrap().unwrap();
    assert_eq!(m.indices(), vec![0]);
}

#[test]
fn budget_below_the_minimum_finds_nothing() {
    let p = margin_net(&[1.0, 1.0], -1.5);
    let cfg = OracleConfig {
        budget: Some(1),
        ..baseline()
    };
    assert!(brute_force_msr(&p, &[1.0, 1.0], &cfg, &mut RandomSource::new(0)).unwrap().is_none());
}

#[test]
fn greedy_keeps_only_the_used_feature() {
    let p = margin_net(&[4.0, 0.0, 0.0, 0.0], -1.0);
    let x = [0.8, 0.3, 0.9, 0.1];
    let g = greedy_sufficient_reason(&p, &x, &MaskingStrategy::baseline_zero(), &mut RandomSource::new(0)).unwrap();
    assert_eq!(g.indices(), vec![0]);
}

#[test]
fn frozen_bank_gives_stable_answers() {
    let p = ModelParams::init(Architecture::new(5, 3, vec![6]), &mut RandomSource::new(2)).unwrap();
    let check = MaskingStrategy::Probabilistic(ProbabilisticConfig {
        domain: SampleDomain::Full,
        samples: 30,
        delta: 0.1,
    });
    let x = [0.1, 0.9, 0.4, 0.6, 0.3];
    let checker = SufficiencyChecker::new(&p, &x, &check, &mut RandomSource::new(7)).unwrap();
    for size in 0..=5 {
        for combo in (0..5).combinations(size) {
            let s = SubsetMask::from_indices(5, &combo).unwrap();
            assert_eq!(checker.is_sufficient(&s).unwrap(), checker.is_sufficient(&s).unwrap());
        }
    }
    assert!(checker.is_sufficient(&SubsetMask::full(5)).unwrap());
}

fn every_check() -> Vec<MaskingStrategy> {
    vec![
        MaskingStrategy::baseline_zero(),
        MaskingStrategy::Probabilistic(ProbabilisticConfig {
            samples: 20,
            ..ProbabilisticConfig::default()
        }),
        MaskingStrategy::default_robust(),
    ]
}

#[test]
fn oracle_is_minimal_and_greedy_is_no_smaller() {
    let mut rng = RandomSource::new(31);
    for net in 0..12 {
        let n = 3 + net % 4;
        let p = ModelParams::init(Architecture::new(n, 3, vec![6]), &mut rng).unwrap();
        let x: Vec<f64> = (0..n).map(|_| rng.uniform()).collect();
        for check in every_check() {
            let seed = rng.seed().wrapping_add(net as u64);
            let checker = SufficiencyChecker::new(&p, &x, &check, &mut RandomSource::new(seed)).unwrap();
            let best = brute_force_with(&checker, n).unwrap().expect("the full set always passes");
            assert!(checker.is_sufficient(&best).unwrap());
            for smaller in 0..best.cardinality() {
                for combo in (0..n).combinations(smaller) {
                    let s = SubsetMask::from_indices(n, &combo).unwrap();
                    assert!(!checker.is_sufficient(&s).unwrap());
                }
            }
            let greedy = greedy_with(&checker, &saliency(&p, &x).unwrap()).unwrap();
            assert!(checker.is_sufficient(&greedy).unwrap());
            assert!(greedy.cardinality() >= best.cardinality());
        }
    }
}
