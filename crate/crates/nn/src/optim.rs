use crate::error::{NnError, Result};
use crate::tensor::Tensor;
use std::collections::HashMap;

/// Adam with bias-corrected moment estimates.
///
/// Moment buffers are keyed by parameter name so layers can hand their
/// tensors over in any order without losing state between steps.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    state: HashMap<String, Moments>,
    step: u64,
}

#[derive(Debug, Clone)]
struct Moments {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            state: HashMap::new(),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Applies one update over every named parameter. The step counter
    /// advances once per call, not per tensor.
    pub fn step<S: AsRef<str>>(&mut self, params: &mut [(S, &mut Tensor)]) -> Result<()> {
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for (name, p) in params.iter_mut() {
            let name = name.as_ref();
            let n = p.len();
            let grad = match p.grad() {
                Some(g) => g.to_vec(),
                None => continue,
            };
            if grad.iter().any(|g| !g.is_finite()) {
                return Err(NnError::NonFiniteGradient {
                    name: name.to_string(),
                });
            }
            let slot = self
                .state
                .entry(name.to_string())
                .or_insert_with(|| Moments {
                    m: vec![0.0; n],
                    v: vec![0.0; n],
                });
            if slot.m.len() != n {
                return Err(NnError::ShapeMismatch {
                    op: "adam",
                    expected: format!("{} elements for '{name}'", slot.m.len()),
                    actual: format!("{n} elements"),
                });
            }
            let data = p.data_mut();
            for i in 0..n {
                let g = grad[i];
                slot.m[i] = self.beta1 * slot.m[i] + (1.0 - self.beta1) * g;
                slot.v[i] = self.beta2 * slot.v[i] + (1.0 - self.beta2) * g * g;
                let m_hat = slot.m[i] / bc1;
                let v_hat = slot.v[i] / bc2;
                data[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}
