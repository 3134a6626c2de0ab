//! Central finite-difference verification of analytic gradients.

use super::tensor::Tensor2D;
use crate::error::{Error, Result};

/// Compares the analytic gradient returned by `f` against central differences.
///
/// `f` maps a point to `(value, gradient)`. The result is the largest
/// `|analytic - numeric| / max(1, |analytic|)` over all coordinates.
pub fn grad_check<F>(mut f: F, x: &Tensor2D, h: f64) -> Result<f64>
where
    F: FnMut(&Tensor2D) -> Result<(f64, Tensor2D)>,
{
    if !(h > 0.0) {
        return Err(Error::Config(format!("finite-difference step must be positive, got {h}")));
    }
    let (value, analytic) = f(x)?;
    if !value.is_finite() || !analytic.is_finite() {
        return Err(Error::Numeric("non-finite value at the base point".into()));
    }
    x.expect_same_shape(&analytic, "grad_check")?;

    let mut probe = x.clone();
    let mut worst: f64 = 0.0;
    for i in 0..x.data().len() {
        let orig = probe.data()[i];
        probe.data_mut()[i] = orig + h;
        let (plus, _) = f(&probe)?;
        probe.data_mut()[i] = orig - h;
        let (minus, _) = f(&probe)?;
        probe.data_mut()[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::Numeric(format!("non-finite value probing coordinate {i}")));
        }
        let numeric = (plus - minus) / (2.0 * h);
        let a = analytic.data()[i];
        worst = worst.max((a - numeric).abs() / a.abs().max(1.0));
    }
    Ok(worst)
}
