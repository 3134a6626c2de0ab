//! Adam with bias-corrected moment estimates.

use crate::model::{Gradients, ModelParams};

#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(params: &ModelParams, lr: f64) -> Self {
        let zeros: Vec<Vec<f64>> = params.blocks().iter().map(|b| vec![0.0; b.len()]).collect();
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.t
    }

    /// `θ ← θ − lr · m̂ / (sqrt(v̂) + eps)` for every parameter.
    pub fn step(&mut self, params: &mut ModelParams, grads: &Gradients) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (((block, g), m), v) in params
            .blocks_mut()
            .into_iter()
            .zip(&grads.blocks)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            for i in 0..block.len() {
                let gi = g[i];
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * gi;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * gi * gi;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                block[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::masking::RandomSource;
    use crate::model::Architecture;

    #[test]
    fn first_step_moves_by_lr_along_the_sign() {
        let mut params =
            ModelParams::init(Architecture::new(3, 2, vec![2]), &mut RandomSource::new(0)).unwrap();
        let before = params.to_flat();
        let mut grads = params.zero_gradients();
        grads.blocks[0][0] = 0.5;
        grads.blocks[0][1] = -3.0;
        let mut adam = Adam::new(&params, 0.01);
        adam.step(&mut params, &grads);
        let after = params.to_flat();
        assert!((before[0] - after[0] - 0.01).abs() < 1e-9);
        assert!((after[1] - before[1] - 0.01).abs() < 1e-9);
        // zero gradient leaves a parameter untouched
        assert_eq!(before[2], after[2]);
    }
}
