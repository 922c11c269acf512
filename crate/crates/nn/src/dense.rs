use crate::error::{NnError, Result};
use crate::init;
use crate::tensor::Tensor;
use rand_chacha::ChaCha8Rng;

/// Fully connected layer. Weight layout is `[out][in]`, input is `[batch, in]`.
#[derive(Debug, Clone)]
pub struct Dense {
    pub weight: Tensor,
    pub bias: Tensor,
    pub in_features: usize,
    pub out_features: usize,
}

impl Dense {
    pub fn new(in_features: usize, out_features: usize, rng: &mut ChaCha8Rng) -> Self {
        Self {
            weight: init::kaiming_uniform(vec![out_features, in_features], in_features, rng),
            bias: Tensor::zeros(vec![out_features]),
            in_features,
            out_features,
        }
    }

    pub fn from_weights(weight: Tensor, bias: Tensor) -> Result<Self> {
        let s = weight.shape();
        if s.len() != 2 {
            return Err(NnError::ShapeMismatch {
                op: "Dense::from_weights",
                expected: "[out][in] weight".into(),
                actual: format!("{s:?}"),
            });
        }
        if bias.shape() != [s[0]] {
            return Err(NnError::ShapeMismatch {
                op: "Dense::from_weights",
                expected: format!("[{}] bias", s[0]),
                actual: format!("{:?}", bias.shape()),
            });
        }
        Ok(Self {
            in_features: s[1],
            out_features: s[0],
            weight,
            bias,
        })
    }

    fn batch_of(&self, x: &Tensor) -> Result<usize> {
        let s = x.shape();
        if s.len() != 2 || s[1] != self.in_features {
            return Err(NnError::ShapeMismatch {
                op: "dense",
                expected: format!("[batch, {}]", self.in_features),
                actual: format!("{s:?}"),
            });
        }
        Ok(s[0])
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let batch = self.batch_of(x)?;
        let mut y = Tensor::zeros(vec![batch, self.out_features]);
        let yd = y.data_mut();
        for b in 0..batch {
            let xr = &x.data()[b * self.in_features..(b + 1) * self.in_features];
            for o in 0..self.out_features {
                let wr = &self.weight.data()[o * self.in_features..(o + 1) * self.in_features];
                let mut acc = self.bias.data()[o];
                for i in 0..self.in_features {
                    acc += wr[i] * xr[i];
                }
                yd[b * self.out_features + o] = acc;
            }
        }
        Ok(y)
    }

    pub fn backward(&mut self, x: &Tensor, grad_out: &Tensor) -> Result<Tensor> {
        let batch = self.batch_of(x)?;
        if grad_out.shape() != [batch, self.out_features] {
            return Err(NnError::ShapeMismatch {
                op: "dense backward",
                expected: format!("[{batch}, {}]", self.out_features),
                actual: format!("{:?}", grad_out.shape()),
            });
        }
        let mut grad_in = Tensor::zeros(x.shape().to_vec());
        let wd = self.weight.data().to_vec();
        {
            let gw = self.weight.grad_mut();
            let gi = grad_in.data_mut();
            for b in 0..batch {
                let xr = &x.data()[b * self.in_features..(b + 1) * self.in_features];
                for o in 0..self.out_features {
                    let g = grad_out.data()[b * self.out_features + o];
                    if g == 0.0 {
                        continue;
                    }
                    for i in 0..self.in_features {
                        gw[o * self.in_features + i] += g * xr[i];
                        gi[b * self.in_features + i] += g * wd[o * self.in_features + i];
                    }
                }
            }
        }
        {
            let gb = self.bias.grad_mut();
            for b in 0..batch {
                for o in 0..self.out_features {
                    gb[o] += grad_out.data()[b * self.out_features + o];
                }
            }
        }
        Ok(grad_in)
    }

    pub fn zero_grad(&mut self) {
        self.weight.zero_grad();
        self.bias.zero_grad();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn forward_is_affine() {
        let d = Dense::from_weights(
            Tensor::new(vec![2, 3], vec![1.0, 0.0, -1.0, 0.5, 0.5, 0.5]).unwrap(),
            Tensor::new(vec![2], vec![0.1, -0.2]).unwrap(),
        )
        .unwrap();
        let x = Tensor::new(vec![1, 3], vec![2.0, 3.0, 4.0]).unwrap();
        let y = d.forward(&x).unwrap();
        assert_relative_eq!(y.data()[0], 2.0 - 4.0 + 0.1);
        assert_relative_eq!(y.data()[1], 0.5 * 9.0 - 0.2);
    }

    #[test]
    fn backward_matches_hand_expansion() {
        let mut d = Dense::from_weights(
            Tensor::new(vec![1, 2], vec![3.0, -2.0]).unwrap(),
            Tensor::zeros(vec![1]),
        )
        .unwrap();
        let x = Tensor::new(vec![1, 2], vec![5.0, 7.0]).unwrap();
        let go = Tensor::new(vec![1, 1], vec![2.0]).unwrap();
        let gi = d.backward(&x, &go).unwrap();
        assert_eq!(gi.data(), &[6.0, -4.0]);
        assert_eq!(d.weight.grad().unwrap(), &[10.0, 14.0]);
        assert_eq!(d.bias.grad().unwrap(), &[2.0]);
    }

    #[test]
    fn rejects_wrong_input_width() {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = Dense::new(4, 2, &mut rng);
        let x = Tensor::zeros(vec![1, 3]);
        assert!(d.forward(&x).is_err());
    }
}
