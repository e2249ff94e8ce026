use serde::{Deserialize, Serialize};

use super::Tensor2;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamConfig {
    pub fn with_lr(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam moment buffers for a fixed list of parameter tensors.
#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    step: u64,
    first: Vec<Tensor2>,
    second: Vec<Tensor2>,
}

impl Adam {
    pub fn new(config: AdamConfig, params: &[&Tensor2]) -> Self {
        let zeros: Vec<Tensor2> = params
            .iter()
            .map(|p| Tensor2::zeros(p.rows(), p.cols()))
            .collect();
        Self {
            config,
            step: 0,
            first: zeros.clone(),
            second: zeros,
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// One bias-corrected Adam update, in place.
    pub fn step(&mut self, params: &mut [&mut Tensor2], grads: &[&Tensor2]) -> Result<()> {
        if params.len() != self.first.len() || grads.len() != self.first.len() {
            return Err(Error::Shape(format!(
                "adam tracks {} tensors, got {} params and {} grads",
                self.first.len(),
                params.len(),
                grads.len()
            )));
        }
        for ((p, g), m) in params.iter().zip(grads).zip(&self.first) {
            if p.shape() != g.shape() || p.shape() != m.shape() {
                return Err(Error::Shape(format!(
                    "param {:?} / grad {:?} / moment {:?}",
                    p.shape(),
                    g.shape(),
                    m.shape()
                )));
            }
        }

        self.step += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.step as i32;
        let correction1 = 1.0 - beta1.powi(t);
        let correction2 = 1.0 - beta2.powi(t);

        for (i, p) in params.iter_mut().enumerate() {
            let g = grads[i].as_slice();
            let m = self.first[i].as_mut_slice();
            let v = self.second[i].as_mut_slice();
            for (j, w) in p.as_mut_slice().iter_mut().enumerate() {
                m[j] = beta1 * m[j] + (1.0 - beta1) * g[j];
                v[j] = beta2 * v[j] + (1.0 - beta2) * g[j] * g[j];
                let m_hat = m[j] / correction1;
                let v_hat = v[j] / correction2;
                *w -= learning_rate * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut w = Tensor2::from_rows(&[[0.5, -1.0]]).unwrap();
        let before = w.clone();
        let g = Tensor2::zeros(1, 2);
        let mut adam = Adam::new(AdamConfig::default(), &[&w]);
        for _ in 0..5 {
            adam.step(&mut [&mut w], &[&g]).unwrap();
        }
        assert_eq!(w, before);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        // t=1: m = 0.1, v = 0.001, m_hat = 1, v_hat = 1, update = 0.1 / (1 + 1e-8)
        let mut w = Tensor2::filled(1, 1, 2.0);
        let g = Tensor2::filled(1, 1, 1.0);
        let mut adam = Adam::new(AdamConfig::with_lr(0.1), &[&w]);
        adam.step(&mut [&mut w], &[&g]).unwrap();
        let expected = 2.0 - 0.1 / (1.0 + 1e-8);
        assert!((w[(0, 0)] - expected).abs() < 1e-15);
        assert!((w[(0, 0)] - 1.9).abs() < 1e-6);
    }

    #[test]
    fn identical_runs_are_bit_identical() {
        let run = || {
            let mut w = Tensor2::from_rows(&[[0.3, 0.1], [-0.2, 0.7]]).unwrap();
            let mut adam = Adam::new(AdamConfig::default(), &[&w]);
            for k in 0..50 {
                let g = w.map(|v| v * 2.0 + k as f64 * 1e-3);
                adam.step(&mut [&mut w], &[&g]).unwrap();
            }
            w
        };
        assert_eq!(run().as_slice(), run().as_slice());
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut w = Tensor2::zeros(2, 2);
        let g = Tensor2::zeros(1, 2);
        let mut adam = Adam::new(AdamConfig::default(), &[&w]);
        assert!(adam.step(&mut [&mut w], &[&g]).is_err());
    }
}
