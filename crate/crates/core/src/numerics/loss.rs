use super::tensor::Tensor2D;
use crate::error::{Error, Result};

/// A scalar loss together with its gradient with respect to the loss input.
#[derive(Debug, Clone)]
pub struct LossValue {
    pub value: f64,
    pub gradient: Tensor2D,
}

/// Row-wise softmax, max-shifted.
pub fn softmax(logits: &Tensor2D) -> Tensor2D {
    let mut out = logits.clone();
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            total += *v;
        }
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    out
}

/// Mean cross-entropy of softmax(logits) against integer targets.
pub fn softmax_ce_loss(logits: &Tensor2D, targets: &[usize]) -> Result<LossValue> {
    if targets.len() != logits.rows() {
        return Err(Error::Dimension {
            op: "softmax_ce_loss",
            left: logits.shape(),
            right: (targets.len(), 1),
        });
    }
    let classes = logits.cols();
    if let Some(&bad) = targets.iter().find(|&&t| t >= classes) {
        return Err(Error::Index {
            what: "class target",
            index: bad,
            limit: classes,
        });
    }
    let batch = logits.rows().max(1) as f64;
    let mut gradient = Tensor2D::zeros(logits.rows(), classes);
    let mut value = 0.0;
    for (r, &t) in targets.iter().enumerate() {
        let row = logits.row(r);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_total = row.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
        // -log softmax_t = log Σ exp(z - max) - (z_t - max)
        value += log_total - (row[t] - max);
        let g = gradient.row_mut(r);
        for (gi, &v) in g.iter_mut().zip(row) {
            *gi = (v - max - log_total).exp() / batch;
        }
        g[t] -= 1.0 / batch;
    }
    let value = value / batch;
    if !value.is_finite() {
        return Err(Error::Numeric("cross-entropy is not finite".into()));
    }
    Ok(LossValue {
        value: value.max(0.0),
        gradient,
    })
}

/// L1 norm of each row, averaged over rows. A single row gives `Σ|v_i|`.
pub fn l1_loss(v: &Tensor2D) -> LossValue {
    let batch = v.rows().max(1) as f64;
    let value = v.data().iter().map(|x| x.abs()).sum::<f64>() / batch;
    let gradient = v.map(|x| {
        if x > 0.0 {
            1.0 / batch
        } else if x < 0.0 {
            -1.0 / batch
        } else {
            0.0
        }
    });
    LossValue { value, gradient }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_two_class() {
        let loss = softmax_ce_loss(&Tensor2D::row_vector(&[0.0, 0.0]), &[0]).unwrap();
        assert!((loss.value - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn saturated_case() {
        let loss = softmax_ce_loss(&Tensor2D::row_vector(&[10.0, -10.0]), &[0]).unwrap();
        assert!(loss.value < 1e-8);
        assert!((loss.value - 2.061_153_6e-9).abs() < 1e-15);
    }

    #[test]
    fn target_out_of_range() {
        let err = softmax_ce_loss(&Tensor2D::row_vector(&[0.0, 0.0]), &[2]).unwrap_err();
        assert!(matches!(err, Error::Index { index: 2, limit: 2, .. }));
    }

    #[test]
    fn ce_rows_sum_to_zero() {
        let logits = Tensor2D::from_rows(&[[1.0, -2.0, 0.5], [3.0, 3.0, -7.0]]);
        let loss = softmax_ce_loss(&logits, &[2, 0]).unwrap();
        for row in loss.gradient.iter_rows() {
            assert!(row.iter().sum::<f64>().abs() < 1e-12);
        }
    }

    #[test]
    fn l1_values() {
        assert_eq!(l1_loss(&Tensor2D::row_vector(&[0.0, 0.0, 0.0])).value, 0.0);
        let l = l1_loss(&Tensor2D::row_vector(&[0.5, 0.25]));
        assert_eq!(l.value, 0.75);
        assert_eq!(l.gradient.data(), &[1.0, 1.0]);
    }

    #[test]
    fn softmax_rows_normalise() {
        let s = softmax(&Tensor2D::from_rows(&[[1000.0, 0.0], [1.0, 1.0]]));
        assert!((s.row(0).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(s.row(1), &[0.5, 0.5]);
    }
}
