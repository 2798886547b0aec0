//! Nesterov-accelerated Adam with bias correction and the 0.96-power
//! momentum schedule, applied per parameter tensor.

use crate::error::{Error, Result};
use crate::numcore::matrix::Matrix;

#[derive(Clone, Copy, Debug)]
pub struct NadamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// psi in mu_t = beta1 * (1 - 0.5 * 0.96^(t * psi))
    pub momentum_decay: f64,
}

impl Default for NadamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            momentum_decay: 0.004,
        }
    }
}

impl NadamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

pub struct NadamState {
    config: NadamConfig,
    step: u64,
    /// product of mu_i for i = 1..=step
    mu_product: f64,
    first_moment: Vec<Matrix>,
    second_moment: Vec<Matrix>,
}

impl NadamState {
    pub fn new(config: NadamConfig, shapes: &[(usize, usize)]) -> Self {
        Self {
            config,
            step: 0,
            mu_product: 1.0,
            first_moment: shapes.iter().map(|&(r, c)| Matrix::zeros(r, c)).collect(),
            second_moment: shapes.iter().map(|&(r, c)| Matrix::zeros(r, c)).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    fn mu(&self, t: u64) -> f64 {
        self.config.beta1 * (1.0 - 0.5 * 0.96f64.powf(t as f64 * self.config.momentum_decay))
    }

    /// One update over all parameter tensors. `params[i]`, `grads[i]` and the
    /// stored moments must agree in shape.
    pub fn step(&mut self, params: &mut [&mut Matrix], grads: &[Matrix]) -> Result<()> {
        if params.len() != self.first_moment.len() || grads.len() != params.len() {
            return Err(Error::Contract(format!(
                "optimizer tracks {} tensors, got {} params / {} grads",
                self.first_moment.len(),
                params.len(),
                grads.len()
            )));
        }
        let t = self.step + 1;
        let mu_t = self.mu(t);
        let mu_next = self.mu(t + 1);
        let prod_t = self.mu_product * mu_t;
        let prod_next = prod_t * mu_next;
        let c = &self.config;
        let beta2_t = 1.0 - c.beta2.powi(t as i32);

        for i in 0..params.len() {
            if params[i].shape() != grads[i].shape() || params[i].shape() != self.first_moment[i].shape() {
                return Err(Error::shape("nadam_step", params[i].shape(), grads[i].shape()));
            }
            let p = params[i].as_mut_slice();
            let g = grads[i].as_slice();
            let m = self.first_moment[i].as_mut_slice();
            let v = self.second_moment[i].as_mut_slice();
            for j in 0..p.len() {
                m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g[j];
                v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g[j] * g[j];
                let m_hat = mu_next * m[j] / (1.0 - prod_next) + (1.0 - mu_t) * g[j] / (1.0 - prod_t);
                let v_hat = v[j] / beta2_t;
                p[j] -= c.learning_rate * m_hat / (v_hat.sqrt() + c.epsilon);
            }
        }
        self.step = t;
        self.mu_product = prod_t;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_on_fresh_state_leaves_parameters_unchanged() {
        let mut state = NadamState::new(NadamConfig::default(), &[(1, 3)]);
        let mut p = Matrix::row_vector(&[1.0, -2.0, 0.5]);
        let before = p.clone();
        state.step(&mut [&mut p], &[Matrix::zeros(1, 3)]).unwrap();
        assert_eq!(p, before);
        assert_eq!(state.step_count(), 1);
    }

    #[test]
    fn two_steps_match_hand_executed_update_equations() {
        // Constant gradient 1.0 on a scalar parameter; the expected values
        // below are a line-by-line transcription of the update rule,
        // evaluated with plain arithmetic.
        let (lr, b1, b2, eps, psi) = (0.001, 0.9, 0.999, 1e-8, 0.004);
        let mut theta = 0.25_f64;
        let (mut m, mut v) = (0.0_f64, 0.0_f64);
        let mut prod = 1.0_f64;
        let mu = |t: f64| b1 * (1.0 - 0.5 * 0.96_f64.powf(t * psi));
        let mut expected = Vec::new();
        for t in 1..=2 {
            let tf = t as f64;
            let g = 1.0;
            let mu_t = mu(tf);
            let mu_next = mu(tf + 1.0);
            let prod_t = prod * mu_t;
            let prod_next = prod_t * mu_next;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let m_hat = mu_next * m / (1.0 - prod_next) + (1.0 - mu_t) * g / (1.0 - prod_t);
            let v_hat = v / (1.0 - b2.powi(t));
            theta -= lr * m_hat / (v_hat.sqrt() + eps);
            prod = prod_t;
            expected.push(theta);
        }

        let mut state = NadamState::new(NadamConfig::default(), &[(1, 1)]);
        let mut p = Matrix::row_vector(&[0.25]);
        let grad = vec![Matrix::row_vector(&[1.0])];
        state.step(&mut [&mut p], &grad).unwrap();
        assert!((p.get(0, 0) - expected[0]).abs() < 1e-10);
        state.step(&mut [&mut p], &grad).unwrap();
        assert!((p.get(0, 0) - expected[1]).abs() < 1e-10);
        assert_eq!(state.step_count(), 2);
    }

    #[test]
    fn converges_to_quadratic_minimum() {
        // f(w) = (w - 3)^2 from w = 0: 5000 steps at lr 0.002.
        let mut state = NadamState::new(NadamConfig::with_learning_rate(0.002), &[(1, 1)]);
        let mut p = Matrix::row_vector(&[0.0]);
        for _ in 0..5000 {
            let w = p.get(0, 0);
            let grad = vec![Matrix::row_vector(&[2.0 * (w - 3.0)])];
            state.step(&mut [&mut p], &grad).unwrap();
        }
        let w = p.get(0, 0);
        assert!((w - 3.0).abs() < 1e-2, "w = {w}");
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let mut state = NadamState::new(NadamConfig::default(), &[(1, 2)]);
        let mut p = Matrix::row_vector(&[1.0, 2.0]);
        let err = state.step(&mut [&mut p], &[Matrix::zeros(1, 3)]).unwrap_err();
        assert!(matches!(err, Error::Shape { .. }));
    }
}
