//! Adam optimizer with coupled (L2-style) weight decay.
//!
//! The decay term is added to the raw gradient before the moment updates,
//! i.e. `g ← g + λθ`, matching the classic formulation rather than the
//! decoupled variant. Moments are kept per parameter in the same order as
//! [`crate::nn::PARAM_NAMES`] when driven by the training loop, but the
//! optimizer itself only cares about shapes.

use crate::{error::CoreError, Result};
use ndarray::Array2;

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Coupled weight decay coefficient λ.
    pub weight_decay: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-2,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 5e-4,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("learning_rate", self.learning_rate > 0.0),
            ("beta1", (0.0..1.0).contains(&self.beta1)),
            ("beta2", (0.0..1.0).contains(&self.beta2)),
            ("epsilon", self.epsilon > 0.0),
            ("weight_decay", self.weight_decay >= 0.0),
        ];
        for (name, ok) in checks {
            if !ok {
                return Err(CoreError::InvalidParameter {
                    name,
                    message: "outside valid Adam range".into(),
                });
            }
        }
        Ok(())
    }
}

/// Optimizer state: first/second moment estimates and the step counter.
#[derive(Debug, Clone)]
pub struct Adam {
    config: AdamConfig,
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
    t: u64,
}

impl Adam {
    /// Creates zeroed moment buffers for parameters of the given shapes.
    pub fn new(config: AdamConfig, shapes: &[(usize, usize)]) -> Result<Self> {
        config.validate()?;
        let m = shapes.iter().map(|&s| Array2::zeros(s)).collect();
        let v = shapes.iter().map(|&s| Array2::zeros(s)).collect();
        Ok(Self { config, m, v, t: 0 })
    }

    pub fn config(&self) -> &AdamConfig {
        &self.config
    }

    /// Completed step count.
    pub fn step_count(&self) -> u64 {
        self.t
    }

    /// Moment buffers, for checkpointing.
    pub fn state(&self) -> (&[Array2<f64>], &[Array2<f64>], u64) {
        (&self.m, &self.v, self.t)
    }

    /// Restores moment buffers saved by [`Adam::state`].
    pub fn restore(&mut self, m: Vec<Array2<f64>>, v: Vec<Array2<f64>>, t: u64) -> Result<()> {
        if m.len() != self.m.len() || v.len() != self.v.len() {
            return Err(CoreError::DimensionMismatch {
                context: "optimizer state parameter count",
                expected: self.m.len(),
                actual: m.len().min(v.len()),
            });
        }
        for (have, want) in m.iter().chain(v.iter()).zip(self.m.iter().chain(self.v.iter())) {
            if have.dim() != want.dim() {
                return Err(CoreError::ShapeMismatch {
                    op: "optimizer state",
                    lhs: have.dim(),
                    rhs: want.dim(),
                });
            }
        }
        self.m = m;
        self.v = v;
        self.t = t;
        Ok(())
    }

    /// Applies one Adam update in place:
    /// `g' = g + λθ`, `m ← β₁m + (1−β₁)g'`, `v ← β₂v + (1−β₂)g'²`,
    /// `θ ← θ − lr · m̂ / (√v̂ + ε)` with bias-corrected `m̂, v̂`.
    pub fn step(&mut self, params: &mut [&mut Array2<f64>], grads: &[Array2<f64>]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(CoreError::DimensionMismatch {
                context: "optimizer parameter count",
                expected: self.m.len(),
                actual: params.len().min(grads.len()),
            });
        }
        for ((p, g), slot) in params.iter().zip(grads).zip(&self.m) {
            if p.dim() != slot.dim() || g.dim() != slot.dim() {
                return Err(CoreError::ShapeMismatch {
                    op: "optimizer step",
                    lhs: p.dim(),
                    rhs: g.dim(),
                });
            }
            if !g.iter().all(|v| v.is_finite()) {
                return Err(CoreError::NonFinite { op: "adam gradient" });
            }
        }
        self.t += 1;
        let c = self.config;
        let bc1 = 1.0 - c.beta1.powi(self.t as i32);
        let bc2 = 1.0 - c.beta2.powi(self.t as i32);
        for (k, (param, grad)) in params.iter_mut().zip(grads).enumerate() {
            let m = &mut self.m[k];
            let v = &mut self.v[k];
            ndarray::Zip::from(&mut **param)
                .and(grad)
                .and(m)
                .and(v)
                .for_each(|theta, &g, m, v| {
                    let g = g + c.weight_decay * *theta;
                    *m = c.beta1 * *m + (1.0 - c.beta1) * g;
                    *v = c.beta2 * *v + (1.0 - c.beta2) * g * g;
                    let m_hat = *m / bc1;
                    let v_hat = *v / bc2;
                    *theta -= c.learning_rate * m_hat / (v_hat.sqrt() + c.epsilon);
                });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn no_decay(lr: f64) -> AdamConfig {
        AdamConfig { learning_rate: lr, weight_decay: 0.0, ..AdamConfig::default() }
    }

    #[test]
    fn zero_gradient_without_decay_is_a_no_op() {
        let mut theta = array![[1.5, -0.25]];
        let mut opt = Adam::new(no_decay(0.1), &[(1, 2)]).unwrap();
        opt.step(&mut [&mut theta], &[Array2::zeros((1, 2))]).unwrap();
        assert_eq!(theta, array![[1.5, -0.25]]);
        assert_eq!(opt.step_count(), 1);
    }

    #[test]
    fn first_step_matches_hand_computation() {
        // θ=1, g=0.5, lr=0.1: m̂=0.5, v̂=0.25, θ' = 1 − 0.1·0.5/(0.5+1e-8).
        let mut theta = array![[1.0]];
        let mut opt = Adam::new(no_decay(0.1), &[(1, 1)]).unwrap();
        opt.step(&mut [&mut theta], &[array![[0.5]]]).unwrap();
        let want = 1.0 - 0.1 * 0.5 / (0.25f64.sqrt() + 1e-8);
        assert_abs_diff_eq!(theta[[0, 0]], want, epsilon = 1e-15);
    }

    #[test]
    fn steps_descend_a_quadratic() {
        // f(θ) = θ², ∇f = 2θ; a few steps should shrink |θ|.
        let mut theta = array![[2.0]];
        let mut opt = Adam::new(no_decay(0.05), &[(1, 1)]).unwrap();
        for _ in 0..50 {
            let grad = theta.mapv(|t| 2.0 * t);
            opt.step(&mut [&mut theta], &[grad]).unwrap();
        }
        assert!(theta[[0, 0]].abs() < 0.5, "got {}", theta[[0, 0]]);
    }

    #[test]
    fn weight_decay_pulls_toward_zero_with_zero_gradient() {
        let mut theta = array![[1.0]];
        let config = AdamConfig { learning_rate: 0.01, weight_decay: 0.1, ..Default::default() };
        let mut opt = Adam::new(config, &[(1, 1)]).unwrap();
        opt.step(&mut [&mut theta], &[array![[0.0]]]).unwrap();
        assert!(theta[[0, 0]] < 1.0 && theta[[0, 0]] > 0.9);
    }

    #[test]
    fn state_round_trip_preserves_trajectory() {
        let mut a = array![[1.0, -2.0]];
        let mut b = a.clone();
        let grads = [array![[0.3, -0.1]], array![[-0.2, 0.4]]];
        let mut opt_a = Adam::new(AdamConfig::default(), &[(1, 2)]).unwrap();
        opt_a.step(&mut [&mut a], &[grads[0].clone()]).unwrap();
        // Clone the state into a fresh optimizer mid-trajectory.
        let (m, v, t) = opt_a.state();
        let (m, v) = (m.to_vec(), v.to_vec());
        let mut opt_b = Adam::new(AdamConfig::default(), &[(1, 2)]).unwrap();
        opt_b.step(&mut [&mut b], &[grads[0].clone()]).unwrap();
        opt_b.restore(m, v, t).unwrap();

        opt_a.step(&mut [&mut a], &[grads[1].clone()]).unwrap();
        opt_b.step(&mut [&mut b], &[grads[1].clone()]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn shape_and_config_validation() {
        assert!(Adam::new(
            AdamConfig { learning_rate: 0.0, ..Default::default() },
            &[(1, 1)]
        )
        .is_err());
        let mut opt = Adam::new(AdamConfig::default(), &[(1, 2)]).unwrap();
        let mut theta = array![[1.0]];
        assert!(opt.step(&mut [&mut theta], &[array![[0.0]]]).is_err());
        let mut theta = array![[1.0, 2.0]];
        assert!(opt
            .step(&mut [&mut theta], &[array![[f64::NAN, 0.0]]])
            .is_err());
    }
}
