//! Forward and backward passes for the dense building blocks.

use super::tensor::{gemm, Tensor2D};
use crate::error::{Error, Result};

/// `x · W + b` with `b` broadcast over rows.
pub fn affine_forward(x: &Tensor2D, w: &Tensor2D, b: &[f64]) -> Result<Tensor2D> {
    if x.cols() != w.rows() {
        return Err(Error::Dimension {
            op: "affine_forward",
            left: x.shape(),
            right: w.shape(),
        });
    }
    if b.len() != w.cols() {
        return Err(Error::Dimension {
            op: "affine_forward bias",
            left: w.shape(),
            right: (1, b.len()),
        });
    }
    let mut out = Tensor2D::zeros(x.rows(), w.cols());
    for r in 0..out.rows() {
        out.row_mut(r).copy_from_slice(b);
    }
    gemm(false, false, x, w, 1.0, &mut out);
    Ok(out)
}

/// Gradients of an affine layer with respect to its input and parameters.
#[derive(Debug, Clone)]
pub struct AffineGrads {
    pub dx: Tensor2D,
    pub dw: Tensor2D,
    pub db: Vec<f64>,
}

pub fn affine_backward(x: &Tensor2D, w: &Tensor2D, upstream: &Tensor2D) -> Result<AffineGrads> {
    check_upstream(x, w, upstream)?;
    let (dw, db) = affine_param_grads(x, upstream);
    let dx = affine_input_grad(w, upstream);
    Ok(AffineGrads { dx, dw, db })
}

fn check_upstream(x: &Tensor2D, w: &Tensor2D, upstream: &Tensor2D) -> Result<()> {
    if x.cols() != w.rows() || upstream.rows() != x.rows() || upstream.cols() != w.cols() {
        return Err(Error::Dimension {
            op: "affine_backward",
            left: x.shape(),
            right: upstream.shape(),
        });
    }
    Ok(())
}

/// `dW = xᵀ · upstream`, `db = Σ_rows upstream`.
pub(crate) fn affine_param_grads(x: &Tensor2D, upstream: &Tensor2D) -> (Tensor2D, Vec<f64>) {
    let mut dw = Tensor2D::zeros(x.cols(), upstream.cols());
    gemm(true, false, x, upstream, 0.0, &mut dw);
    let mut db = vec![0.0; upstream.cols()];
    for row in upstream.iter_rows() {
        for (acc, &g) in db.iter_mut().zip(row) {
            *acc += g;
        }
    }
    (dw, db)
}

/// `dx = upstream · Wᵀ`.
pub(crate) fn affine_input_grad(w: &Tensor2D, upstream: &Tensor2D) -> Tensor2D {
    let mut dx = Tensor2D::zeros(upstream.rows(), w.rows());
    gemm(false, true, upstream, w, 0.0, &mut dx);
    dx
}

pub fn relu(x: &Tensor2D) -> Tensor2D {
    x.map(|v| if v > 0.0 { v } else { 0.0 })
}

/// Passes `upstream` only where the pre-activation was strictly positive.
pub fn relu_backward(pre: &Tensor2D, upstream: &Tensor2D) -> Result<Tensor2D> {
    pre.expect_same_shape(upstream, "relu_backward")?;
    let mut out = upstream.clone();
    for (g, &p) in out.data_mut().iter_mut().zip(pre.data()) {
        if p <= 0.0 {
            *g = 0.0;
        }
    }
    Ok(out)
}

#[inline]
pub fn sigmoid_scalar(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

pub fn sigmoid(x: &Tensor2D) -> Tensor2D {
    x.map(sigmoid_scalar)
}

/// Backward through a sigmoid given its *output*.
pub fn sigmoid_backward(out: &Tensor2D, upstream: &Tensor2D) -> Result<Tensor2D> {
    out.expect_same_shape(upstream, "sigmoid_backward")?;
    let mut g = upstream.clone();
    for (gi, &s) in g.data_mut().iter_mut().zip(out.data()) {
        *gi *= s * (1.0 - s);
    }
    Ok(g)
}
