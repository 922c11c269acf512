use crate::error::{NnError, Result};
use crate::tensor::{Shape4, Tensor};

const EPS: f64 = 1e-5;
const MOMENTUM: f64 = 0.1;

/// Per-channel batch normalization over NCHW input.
///
/// Training normalizes with biased batch statistics and folds an unbiased
/// variance estimate into the running stats. Evaluation uses the running
/// stats and fails if none were ever recorded or seeded.
#[derive(Debug, Clone)]
pub struct BatchNorm2d {
    pub gamma: Tensor,
    pub beta: Tensor,
    pub running_mean: Tensor,
    pub running_var: Tensor,
    pub channels: usize,
    initialized: bool,
}

/// Saved activations a train-mode forward pass leaves for its backward pass.
#[derive(Debug, Clone)]
pub struct BnCache {
    x_hat: Tensor,
    inv_std: Vec<f64>,
}

impl BatchNorm2d {
    pub fn new(channels: usize) -> Self {
        Self {
            gamma: Tensor::full(vec![channels], 1.0),
            beta: Tensor::zeros(vec![channels]),
            running_mean: Tensor::zeros(vec![channels]),
            running_var: Tensor::full(vec![channels], 1.0),
            channels,
            initialized: false,
        }
    }

    /// Marks the running stats as valid, e.g. after loading a checkpoint or
    /// seeding an untrained model with mean 0 and variance 1.
    pub fn seed_running_stats(&mut self) {
        self.initialized = true;
    }

    pub fn stats_initialized(&self) -> bool {
        self.initialized
    }

    fn check_input(&self, x: &Tensor) -> Result<Shape4> {
        let s = Shape4::of(x)?;
        if s.c != self.channels {
            return Err(NnError::ShapeMismatch {
                op: "batchnorm2d",
                expected: format!("{} channels", self.channels),
                actual: format!("{} channels", s.c),
            });
        }
        Ok(s)
    }

    pub fn forward_train(&mut self, x: &Tensor) -> Result<(Tensor, BnCache)> {
        let s = self.check_input(x)?;
        let m = (s.n * s.h * s.w) as f64;
        if m < 1.0 {
            return Err(NnError::InvalidConfig("batchnorm over an empty batch".into()));
        }
        let mut y = Tensor::zeros(x.shape().to_vec());
        let mut x_hat = Tensor::zeros(x.shape().to_vec());
        let mut inv_std = vec![0.0; s.c];
        for c in 0..s.c {
            let mut sum = 0.0;
            let mut sq = 0.0;
            for n in 0..s.n {
                let base = (n * s.c + c) * s.h * s.w;
                for &v in &x.data()[base..base + s.h * s.w] {
                    sum += v;
                    sq += v * v;
                }
            }
            let mean = sum / m;
            let var = (sq / m - mean * mean).max(0.0);
            let istd = 1.0 / (var + EPS).sqrt();
            inv_std[c] = istd;

            let g = self.gamma.data()[c];
            let b = self.beta.data()[c];
            for n in 0..s.n {
                let base = (n * s.c + c) * s.h * s.w;
                for i in base..base + s.h * s.w {
                    let xh = (x.data()[i] - mean) * istd;
                    x_hat.data_mut()[i] = xh;
                    y.data_mut()[i] = g * xh + b;
                }
            }

            // Running update uses the unbiased variance when the batch allows it.
            let unbiased = if m > 1.0 { var * m / (m - 1.0) } else { var };
            let rm = &mut self.running_mean.data_mut()[c];
            *rm = (1.0 - MOMENTUM) * *rm + MOMENTUM * mean;
            let rv = &mut self.running_var.data_mut()[c];
            *rv = (1.0 - MOMENTUM) * *rv + MOMENTUM * unbiased;
        }
        self.initialized = true;
        Ok((y, BnCache { x_hat, inv_std }))
    }

    pub fn forward_eval(&self, x: &Tensor) -> Result<Tensor> {
        if !self.initialized {
            return Err(NnError::UninitializedRunningStats);
        }
        let s = self.check_input(x)?;
        let mut y = Tensor::zeros(x.shape().to_vec());
        for c in 0..s.c {
            let mean = self.running_mean.data()[c];
            let istd = 1.0 / (self.running_var.data()[c] + EPS).sqrt();
            let g = self.gamma.data()[c];
            let b = self.beta.data()[c];
            for n in 0..s.n {
                let base = (n * s.c + c) * s.h * s.w;
                for i in base..base + s.h * s.w {
                    y.data_mut()[i] = g * (x.data()[i] - mean) * istd + b;
                }
            }
        }
        Ok(y)
    }

    /// Train-mode backward. Accumulates gamma/beta grads and returns dx.
    pub fn backward(&mut self, cache: &BnCache, grad_out: &Tensor) -> Result<Tensor> {
        let s = self.check_input(grad_out)?;
        if cache.x_hat.shape() != grad_out.shape() {
            return Err(NnError::ShapeMismatch {
                op: "batchnorm2d backward",
                expected: format!("{:?}", cache.x_hat.shape()),
                actual: format!("{:?}", grad_out.shape()),
            });
        }
        let m = (s.n * s.h * s.w) as f64;
        let mut grad_in = Tensor::zeros(grad_out.shape().to_vec());
        for c in 0..s.c {
            let g = self.gamma.data()[c];
            let istd = cache.inv_std[c];
            let mut sum_dy = 0.0;
            let mut sum_dy_xhat = 0.0;
            for n in 0..s.n {
                let base = (n * s.c + c) * s.h * s.w;
                for i in base..base + s.h * s.w {
                    let dy = grad_out.data()[i];
                    sum_dy += dy;
                    sum_dy_xhat += dy * cache.x_hat.data()[i];
                }
            }
            self.gamma.grad_mut()[c] += sum_dy_xhat;
            self.beta.grad_mut()[c] += sum_dy;

            // dx = gamma * inv_std / m * (m*dy - sum(dy) - x_hat * sum(dy*x_hat))
            let scale = g * istd / m;
            for n in 0..s.n {
                let base = (n * s.c + c) * s.h * s.w;
                for i in base..base + s.h * s.w {
                    let dy = grad_out.data()[i];
                    grad_in.data_mut()[i] =
                        scale * (m * dy - sum_dy - cache.x_hat.data()[i] * sum_dy_xhat);
                }
            }
        }
        Ok(grad_in)
    }

    pub fn zero_grad(&mut self) {
        self.gamma.zero_grad();
        self.beta.zero_grad();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample() -> Tensor {
        Tensor::from_fn(vec![2, 2, 2, 2], |i| (i as f64 * 0.37).sin() * 2.0 + 0.3)
    }

    #[test]
    fn train_output_is_standardized_per_channel() {
        let mut bn = BatchNorm2d::new(2);
        let x = sample();
        let (y, _) = bn.forward_train(&x).unwrap();
        for c in 0..2 {
            let mut vals = Vec::new();
            for n in 0..2 {
                for h in 0..2 {
                    for w in 0..2 {
                        vals.push(y.at4(n, c, h, w));
                    }
                }
            }
            let m = vals.iter().sum::<f64>() / vals.len() as f64;
            let v = vals.iter().map(|&a| (a - m) * (a - m)).sum::<f64>() / vals.len() as f64;
            assert_relative_eq!(m, 0.0, epsilon = 1e-12);
            assert_relative_eq!(v, 1.0, epsilon = 1e-4);
        }
    }

    #[test]
    fn eval_before_any_train_step_is_an_error() {
        let bn = BatchNorm2d::new(2);
        let err = bn.forward_eval(&sample()).unwrap_err();
        assert!(matches!(err, NnError::UninitializedRunningStats));
    }

    #[test]
    fn seeded_stats_make_eval_an_affine_map() {
        let mut bn = BatchNorm2d::new(2);
        bn.seed_running_stats();
        let x = sample();
        let y = bn.forward_eval(&x).unwrap();
        // mean 0, var 1, gamma 1, beta 0: y = x / sqrt(1 + eps)
        let k = 1.0 / (1.0f64 + 1e-5).sqrt();
        for (a, b) in x.iter().zip(y.iter()) {
            assert_relative_eq!(a * k, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn running_stats_blend_with_momentum() {
        let mut bn = BatchNorm2d::new(1);
        let x = Tensor::from_fn(vec![1, 1, 2, 2], |i| i as f64); // 0 1 2 3
        bn.forward_train(&x).unwrap();
        // batch mean 1.5; biased var 1.25; unbiased var 1.25*4/3
        assert_relative_eq!(bn.running_mean.data()[0], 0.1 * 1.5, epsilon = 1e-12);
        assert_relative_eq!(
            bn.running_var.data()[0],
            0.9 * 1.0 + 0.1 * (1.25 * 4.0 / 3.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn eval_applies_running_statistics() {
        let mut bn = BatchNorm2d::new(1);
        let x = Tensor::from_fn(vec![4, 1, 4, 4], |i| (i as f64 * 0.11).cos());
        for _ in 0..400 {
            bn.forward_train(&x).unwrap();
        }
        // Identical batches drive the running stats onto the batch mean and
        // the unbiased batch variance; eval must normalize with those.
        let m = x.len() as f64;
        let mean = x.iter().sum::<f64>() / m;
        let biased = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / m;
        let unbiased = biased * m / (m - 1.0);
        let ye = bn.forward_eval(&x).unwrap();
        for (v, b) in x.iter().zip(ye.iter()) {
            let expect = (v - mean) / (unbiased + 1e-5).sqrt();
            assert_relative_eq!(expect, b, epsilon = 1e-9);
        }
    }
}
