use proptest::prelude::*;
use sst_core::masking::RandomSource;
use sst_core::numerics::*;

fn random(rows: usize, cols: usize, lo: f64, hi: f64, rng: &mut RandomSource) -> Tensor2D {
    let data = (0..rows * cols).map(|_| rng.uniform_in(lo, hi)).collect();
    Tensor2D::from_vec(rows, cols, data).unwrap()
}

fn naive(x: &Tensor2D, w: &Tensor2D, b: &[f64]) -> Tensor2D {
    let mut out = Tensor2D::zeros(x.rows(), w.cols());
    for i in 0..x.rows() {
        for j in 0..w.cols() {
            let mut acc = b[j];
            for k in 0..x.cols() {
                acc += x.get(i, k) * w.get(k, j);
            }
            out.set(i, j, acc);
        }
    }
    out
}

fn weighted_sum(v: &Tensor2D, r: &Tensor2D) -> f64 {
    v.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
}

#[test]
fn affine_random_case_matches_triple_loop() {
    let mut rng = RandomSource::new(11);
    let x = random(3, 4, -1.0, 1.0, &mut rng);
    let w = random(4, 2, -1.0, 1.0, &mut rng);
    let b = vec![0.3, -0.7];
    let got = affine_forward(&x, &w, &b).unwrap();
    let want = naive(&x, &w, &b);
    for (g, e) in got.data().iter().zip(want.data()) {
        assert!((g - e).abs() <= 1e-12);
    }
}

#[test]
fn affine_shape_error_names_both_shapes() {
    let err = affine_forward(&Tensor2D::zeros(1, 3), &Tensor2D::zeros(2, 2), &[0.0, 0.0]).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("(1, 3)") && msg.contains("(2, 2)"), "{msg}");
}

#[test]
fn affine_gradients_by_finite_differences() {
    let mut rng = RandomSource::new(5);
    for _ in 0..100 {
        let x = random(3, 4, -1.0, 1.0, &mut rng);
        let w = random(4, 3, -1.0, 1.0, &mut rng);
        let b: Vec<f64> = (0..3).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
        let r = random(3, 3, -1.0, 1.0, &mut rng);
        let grads = affine_backward(&x, &w, &r).unwrap();

        let ex = grad_check(
            |xp| Ok((weighted_sum(&affine_forward(xp, &w, &b)?, &r), grads.dx.clone())),
            &x,
            1e-5,
        )
        .unwrap();
        let ew = grad_check(
            |wp| Ok((weighted_sum(&affine_forward(&x, wp, &b)?, &r), grads.dw.clone())),
            &w,
            1e-5,
        )
        .unwrap();
        let eb = grad_check(
            |bp| {
                let v = weighted_sum(&affine_forward(&x, &w, bp.data())?, &r);
                Ok((v, Tensor2D::row_vector(&grads.db)))
            },
            &Tensor2D::row_vector(&b),
            1e-5,
        )
        .unwrap();
        assert!(ex < 1e-4 && ew < 1e-4 && eb < 1e-4, "{ex} {ew} {eb}");
    }
}

#[test]
fn relu_gradient_away_from_kinks() {
    let mut rng = RandomSource::new(9);
    for _ in 0..100 {
        let mut x = random(2, 5, -1.0, 1.0, &mut rng);
        for v in x.data_mut() {
            if v.abs() < 1e-3 {
                *v = 0.5;
            }
        }
        let r = random(2, 5, -1.0, 1.0, &mut rng);
        let analytic = relu_backward(&x, &r).unwrap();
        let err = grad_check(|xp| Ok((weighted_sum(&relu(xp), &r), analytic.clone())), &x, 1e-5).unwrap();
        assert!(err < 1e-6, "{err}");
    }
}

#[test]
fn sigmoid_gradient() {
    let mut rng = RandomSource::new(13);
    for _ in 0..100 {
        let x = random(2, 4, -4.0, 4.0, &mut rng);
        let r = random(2, 4, -1.0, 1.0, &mut rng);
        let analytic = sigmoid_backward(&sigmoid(&x), &r).unwrap();
        let err = grad_check(|xp| Ok((weighted_sum(&sigmoid(xp), &r), analytic.clone())), &x, 1e-5).unwrap();
        assert!(err < 1e-4, "{err}");
    }
}

#[test]
fn cross_entropy_gradient() {
    let mut rng = RandomSource::new(17);
    for _ in 0..100 {
        let logits = random(4, 4, -3.0, 3.0, &mut rng);
        let targets: Vec<usize> = (0..4).map(|_| (rng.uniform() * 4.0) as usize).collect();
        let analytic = softmax_ce_loss(&logits, &targets).unwrap().gradient;
        let err = grad_check(
            |lp| Ok((softmax_ce_loss(lp, &targets)?.value, analytic.clone())),
            &logits,
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-6, "{err}");
    }
}

#[test]
fn l1_gradient_on_positive_scores() {
    let mut rng = RandomSource::new(19);
    for _ in 0..100 {
        let v = random(3, 6, 0.01, 1.0, &mut rng);
        let err = grad_check(
            |vp| {
                let l = l1_loss(vp);
                Ok((l.value, l1_loss(&v).gradient))
            },
            &v,
            1e-5,
        )
        .unwrap();
        assert!(err < 1e-4, "{err}");
    }
}

#[test]
fn l1_examples() {
    assert_eq!(l1_loss(&Tensor2D::row_vector(&[0.0, 0.0, 0.0])).value, 0.0);
    let l = l1_loss(&Tensor2D::row_vector(&[0.5, 0.25]));
    assert_eq!(l.value, 0.75);
    assert_eq!(l.gradient.data(), &[1.0, 1.0]);
}

#[test]
fn cross_entropy_examples() {
    let l = softmax_ce_loss(&Tensor2D::row_vector(&[0.0, 0.0]), &[0]).unwrap();
    assert!((l.value - std::f64::consts::LN_2).abs() < 1e-12);
    let l = softmax_ce_loss(&Tensor2D::row_vector(&[10.0, -10.0]), &[0]).unwrap();
    assert!(l.value < 1e-8 && l.value > 0.0);
    assert!(softmax_ce_loss(&Tensor2D::row_vector(&[0.0, 0.0]), &[2]).is_err());
}

fn tensor(rows: usize, cols: usize) -> impl Strategy<Value = Tensor2D> {
    prop::collection::vec(-5.0f64..5.0, rows * cols)
        .prop_map(move |d| Tensor2D::from_vec(rows, cols, d).unwrap())
}

proptest! {
    #[test]
    fn affine_equals_naive(
        (x, w, b) in (1usize..6, 1usize..6, 1usize..6).prop_flat_map(|(r, k, c)| {
            (tensor(r, k), tensor(k, c), prop::collection::vec(-5.0f64..5.0, c))
        })
    ) {
        let got = affine_forward(&x, &w, &b).unwrap();
        let want = naive(&x, &w, &b);
        for (g, e) in got.data().iter().zip(want.data()) {
            prop_assert!((g - e).abs() <= 1e-12);
        }
    }

    #[test]
    fn relu_is_nonnegative_and_identity_on_positives(x in tensor(3, 7)) {
        let y = relu(&x);
        for (a, b) in x.data().iter().zip(y.data()) {
            prop_assert!(*b >= 0.0);
            if *a >= 0.0 {
                prop_assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn cross_entropy_rows_sum_to_zero(
        logits in tensor(4, 5),
        targets in prop::collection::vec(0usize..5, 4)
    ) {
        let l = softmax_ce_loss(&logits, &targets).unwrap();
        prop_assert!(l.value >= 0.0);
        for row in l.gradient.iter_rows() {
            prop_assert!(row.iter().sum::<f64>().abs() <= 1e-12);
        }
        prop_assert_eq!(l.gradient.shape(), logits.shape());
    }
}
