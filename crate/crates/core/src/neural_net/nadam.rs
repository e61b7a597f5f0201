use crate::error::{CcnError, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NadamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for NadamConfig {
    fn default() -> Self {
        NadamConfig { learning_rate: 5e-4, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

/// Adam with Nesterov momentum (no momentum-decay schedule).
///
/// With bias-corrected moments m̂ = m/(1−β₁ᵗ), v̂ = v/(1−β₂ᵗ):
///
/// ```text
/// θ ← θ − lr · (β₁·m̂ + (1−β₁)·g/(1−β₁ᵗ)) / (√v̂ + ε)
/// ```
#[derive(Clone, Debug)]
pub struct Nadam<T> {
    config: NadamConfig,
    step: u64,
    m: Vec<Vec<T>>,
    v: Vec<Vec<T>>,
}

impl<T: Scalar> Nadam<T> {
    /// Zero moments shaped like `shapes` (one length per parameter tensor).
    pub fn new(config: NadamConfig, shapes: impl IntoIterator<Item = usize>) -> Self {
        let (m, v) = shapes.into_iter().map(|n| (vec![T::zero(); n], vec![T::zero(); n])).unzip();
        Nadam { config, step: 0, m, v }
    }

    pub fn config(&self) -> &NadamConfig {
        &self.config
    }

    /// Steps taken so far.
    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Applies one update. A non-finite gradient rejects the whole step and
    /// leaves both parameters and optimizer state untouched.
    pub fn step(&mut self, params: &mut [&mut [T]], grads: &[&[T]]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(CcnError::InvalidInput(format!(
                "optimizer tracks {} tensors, got {} params / {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        for (i, g) in grads.iter().enumerate() {
            if g.len() != self.m[i].len() || params[i].len() != self.m[i].len() {
                return Err(CcnError::InvalidInput(format!("tensor {i} changed size")));
            }
            if g.iter().any(|v| !v.is_finite()) {
                return Err(CcnError::NumericalFault(format!("non-finite gradient in tensor {i}")));
            }
        }
        self.step += 1;
        let t = self.step as i32;
        let c = &self.config;
        let b1 = T::lit(c.beta1);
        let b2 = T::lit(c.beta2);
        let one = T::one();
        let bc1 = T::lit(1.0 - c.beta1.powi(t));
        let bc2 = T::lit(1.0 - c.beta2.powi(t));
        let lr = T::lit(c.learning_rate);
        let eps = T::lit(c.epsilon);
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            for j in 0..g.len() {
                let gj = g[j];
                m[j] = b1 * m[j] + (one - b1) * gj;
                v[j] = b2 * v[j] + (one - b2) * gj * gj;
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                let nesterov = b1 * m_hat + (one - b1) * gj / bc1;
                p[j] -= lr * nesterov / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
