use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        let in_unit = |b: f64| (0.0..1.0).contains(&b);
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::domain("learning rate must be positive"));
        }
        if !in_unit(self.beta1) || !in_unit(self.beta2) {
            return Err(Error::domain("Adam betas must lie in [0, 1)"));
        }
        if self.epsilon.is_nan() || self.epsilon <= 0.0 {
            return Err(Error::domain("Adam epsilon must be positive"));
        }
        Ok(())
    }
}

/// Moment estimates for a flat parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    pub first_moment: Vec<f64>,
    pub second_moment: Vec<f64>,
}

impl AdamState {
    pub fn new(n_params: usize, config: AdamConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            step: 0,
            first_moment: vec![0.0; n_params],
            second_moment: vec![0.0; n_params],
        })
    }

    /// One bias-corrected update of `params` along `grads`.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        let n = self.first_moment.len();
        if params.len() != n || grads.len() != n {
            return Err(Error::shape(format!(
                "optimizer tracks {n} parameters, got {} params and {} gradients",
                params.len(),
                grads.len()
            )));
        }
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        self.step += 1;
        let t = self.step as i32;
        let correction1 = 1.0 - beta1.powi(t);
        let correction2 = 1.0 - beta2.powi(t);
        for i in 0..n {
            let g = grads[i];
            let m = beta1 * self.first_moment[i] + (1.0 - beta1) * g;
            let v = beta2 * self.second_moment[i] + (1.0 - beta2) * g * g;
            self.first_moment[i] = m;
            self.second_moment[i] = v;
            let m_hat = m / correction1;
            let v_hat = v / correction2;
            params[i] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut state = AdamState::new(1, AdamConfig::default()).unwrap();
        let mut p = [0.0];
        state.step(&mut p, &[1.0]).unwrap();
        // m̂ = 1 and v̂ = 1 after one step, so the update is lr / (1 + ε).
        assert_relative_eq!(p[0], -1e-3 / (1.0 + 1e-8), max_relative = 1e-12);
        assert_eq!(state.step, 1);
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut state = AdamState::new(3, AdamConfig::default()).unwrap();
        let mut p = [1.0, -2.0, 0.5];
        for _ in 0..5 {
            state.step(&mut p, &[0.0; 3]).unwrap();
        }
        assert_eq!(p, [1.0, -2.0, 0.5]);
    }

    #[test]
    fn opposite_gradients_pull_first_moment_back() {
        let mut state = AdamState::new(1, AdamConfig::default()).unwrap();
        let mut p = [0.0];
        state.step(&mut p, &[1.0]).unwrap();
        let after_one = state.first_moment[0];
        state.step(&mut p, &[-1.0]).unwrap();
        // m₁ = 0.1, m₂ = 0.9·0.1 − 0.1 = −0.01
        assert_relative_eq!(after_one, 0.1, max_relative = 1e-12);
        assert_relative_eq!(state.first_moment[0], -0.01, max_relative = 1e-12);
        assert!(state.first_moment[0].abs() < after_one.abs());
    }

    #[test]
    fn shape_mismatch_and_bad_config() {
        let mut state = AdamState::new(2, AdamConfig::default()).unwrap();
        assert!(matches!(
            state.step(&mut [0.0], &[1.0, 2.0]),
            Err(Error::Shape(_))
        ));
        let bad = AdamConfig {
            beta1: 1.0,
            ..Default::default()
        };
        assert!(AdamState::new(1, bad).is_err());
    }
}
