//! Adam state for the critic fits. The moment estimates persist across
//! epochs, matching one long optimizer run per network.

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct AdamState {
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    pub fn new(param_count: usize) -> Self {
        Self {
            first_moment: vec![0.0; param_count],
            second_moment: vec![0.0; param_count],
            step: 0,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    /// Consume one gradient and return the parameter update (already
    /// negated: add it to the parameters).
    pub fn step(&mut self, grad: &[f64], lr: f64) -> Result<Vec<f64>> {
        if grad.len() != self.first_moment.len() {
            return Err(Error::DimensionMismatch {
                context: "AdamState::step",
                expected: self.first_moment.len(),
                got: grad.len(),
            });
        }
        self.step += 1;
        let bias1 = 1.0 - self.beta1.powi(self.step as i32);
        let bias2 = 1.0 - self.beta2.powi(self.step as i32);
        let mut update = vec![0.0; grad.len()];
        for i in 0..grad.len() {
            let g = grad[i];
            self.first_moment[i] = self.beta1 * self.first_moment[i] + (1.0 - self.beta1) * g;
            self.second_moment[i] =
                self.beta2 * self.second_moment[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.first_moment[i] / bias1;
            let v_hat = self.second_moment[i] / bias2;
            update[i] = -lr * m_hat / (v_hat.sqrt() + self.epsilon);
        }
        Ok(update)
    }
}
