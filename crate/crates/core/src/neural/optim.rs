//! Adam with decoupled weight decay on flat parameter vectors.
//!
//! The decay term is applied outside the adaptive rescaling, so with zero
//! gradient a parameter shrinks by exactly `1 - lr * weight_decay` per
//! step.

use crate::scalar::{real, Scalar};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self { lr: 5e-4, beta1: 0.9, beta2: 0.999, eps: 1e-8, weight_decay: 0.01 }
    }
}

impl OptimConfig {
    pub fn with_lr(mut self, lr: f64) -> Self {
        self.lr = lr;
        self
    }

    pub fn with_weight_decay(mut self, wd: f64) -> Self {
        self.weight_decay = wd;
        self
    }
}

/// Optimizer state: first/second moment accumulators and the step count.
#[derive(Debug, Clone)]
pub struct AdamW<T> {
    config: OptimConfig,
    step: u64,
    m: Vec<T>,
    v: Vec<T>,
}

impl<T: Scalar> AdamW<T> {
    pub fn new(param_count: usize, config: OptimConfig) -> Self {
        Self {
            config,
            step: 0,
            m: vec![T::zero(); param_count],
            v: vec![T::zero(); param_count],
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn config(&self) -> OptimConfig {
        self.config
    }

    /// One update over all parameters; shapes must match the constructor.
    pub fn step(&mut self, params: &mut [T], grads: &[T]) {
        assert_eq!(params.len(), self.m.len(), "parameter count changed");
        assert_eq!(grads.len(), self.m.len(), "gradient count mismatch");
        self.step += 1;
        let lr = real::<T>(self.config.lr);
        let b1 = real::<T>(self.config.beta1);
        let b2 = real::<T>(self.config.beta2);
        let eps = real::<T>(self.config.eps);
        let wd = real::<T>(self.config.weight_decay);
        let one = T::one();
        let bias1 = one - real::<T>(self.config.beta1.powi(self.step as i32));
        let bias2 = one - real::<T>(self.config.beta2.powi(self.step as i32));
        for ((p, &g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            *m = b1 * *m + (one - b1) * g;
            *v = b2 * *v + (one - b2) * g * g;
            let m_hat = *m / bias1;
            let v_hat = *v / bias2;
            *p = *p - lr * wd * *p - lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_zero_decay_is_identity() {
        let mut opt = AdamW::<f64>::new(3, OptimConfig::default().with_weight_decay(0.0));
        let mut params = vec![1.0, -2.0, 0.5];
        for _ in 0..5 {
            opt.step(&mut params, &[0.0, 0.0, 0.0]);
        }
        assert_eq!(params, vec![1.0, -2.0, 0.5]);
        assert_eq!(opt.step_count(), 5);
    }

    #[test]
    fn zero_gradient_decay_shrinks_geometrically() {
        let cfg = OptimConfig { lr: 0.1, weight_decay: 0.5, ..OptimConfig::default() };
        let mut opt = AdamW::<f64>::new(1, cfg);
        let mut params = vec![2.0];
        opt.step(&mut params, &[0.0]);
        assert!((params[0] - 2.0 * (1.0 - 0.1 * 0.5)).abs() < 1e-15);
        opt.step(&mut params, &[0.0]);
        assert!((params[0] - 2.0 * (1.0 - 0.1 * 0.5f64).powi(2)).abs() < 1e-15);
    }

    /// Straight-line scalar reference of the update rule, kept independent
    /// of the vectorized implementation.
    fn scalar_reference(steps: usize, g: f64, cfg: OptimConfig, mut p: f64) -> f64 {
        let (mut m, mut v) = (0.0f64, 0.0f64);
        for t in 1..=steps {
            m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
            v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
            let m_hat = m / (1.0 - cfg.beta1.powi(t as i32));
            let v_hat = v / (1.0 - cfg.beta2.powi(t as i32));
            p = p - cfg.lr * cfg.weight_decay * p - cfg.lr * m_hat / (v_hat.sqrt() + cfg.eps);
        }
        p
    }

    #[test]
    fn trajectory_matches_scalar_reference() {
        let cfg = OptimConfig { lr: 0.01, weight_decay: 0.02, ..OptimConfig::default() };
        for &g in &[0.3, -1.7, 0.0001] {
            let mut opt = AdamW::<f64>::new(1, cfg);
            let mut params = vec![0.9];
            for _ in 0..50 {
                opt.step(&mut params, &[g]);
            }
            let expected = scalar_reference(50, g, cfg, 0.9);
            assert!(
                (params[0] - expected).abs() < 1e-12,
                "g={g}: {} vs {expected}",
                params[0]
            );
        }
    }

    #[test]
    fn constant_gradient_moves_against_it() {
        let mut opt = AdamW::<f64>::new(1, OptimConfig::default().with_weight_decay(0.0).with_lr(0.1));
        let mut params = vec![0.0];
        for _ in 0..20 {
            opt.step(&mut params, &[1.0]);
        }
        assert!(params[0] < -0.5, "param should decrease, got {}", params[0]);
    }
}
