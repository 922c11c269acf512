use crate::error::Result;
use scmap_nn::{sigmoid, Activation, Dense, Shape4, Tensor};
use rand_chacha::ChaCha8Rng;

/// Channel-wise SNR gate: a one-input dense layer produces per-channel
/// logits from snr_db / 20, and the sigmoid of each logit scales its
/// feature channel. With gating disabled the layer is an identity map.
#[derive(Debug, Clone)]
pub struct SnrGate {
    pub fc: Dense,
    pub enabled: bool,
    pub channels: usize,
}

#[derive(Debug, Clone)]
pub struct GateCache {
    x: Tensor,
    snr_input: Tensor,
    logits: Tensor,
    weights: Vec<f64>,
}

impl SnrGate {
    pub fn new(channels: usize, enabled: bool, rng: &mut ChaCha8Rng) -> Self {
        Self {
            fc: Dense::new(1, channels, rng),
            enabled,
            channels,
        }
    }

    fn weights_for(&self, snr_db: f64) -> Result<(Tensor, Tensor, Vec<f64>)> {
        let snr_input = Tensor::new(vec![1, 1], vec![snr_db / 20.0]).expect("1x1 tensor");
        let logits = self.fc.forward(&snr_input)?;
        let weights = logits.iter().map(|&v| sigmoid(v)).collect();
        Ok((snr_input, logits, weights))
    }

    pub fn forward(&self, x: &Tensor, snr_db: f64) -> Result<(Tensor, GateCache)> {
        let s = Shape4::of(x)?;
        if !self.enabled {
            return Ok((
                x.clone(),
                GateCache {
                    x: x.clone(),
                    snr_input: Tensor::zeros(vec![1, 1]),
                    logits: Tensor::zeros(vec![1, self.channels]),
                    weights: vec![1.0; self.channels],
                },
            ));
        }
        let (snr_input, logits, weights) = self.weights_for(snr_db)?;
        let mut y = Tensor::zeros(x.shape().to_vec());
        for n in 0..s.n {
            for c in 0..s.c {
                let w = weights[c];
                let base = (n * s.c + c) * s.h * s.w;
                for i in base..base + s.h * s.w {
                    y.data_mut()[i] = x.data()[i] * w;
                }
            }
        }
        Ok((
            y,
            GateCache {
                x: x.clone(),
                snr_input,
                logits,
                weights,
            },
        ))
    }

    /// Accumulates fc grads and returns the gradient w.r.t. the gate input.
    pub fn backward(&mut self, cache: &GateCache, grad_out: &Tensor) -> Result<Tensor> {
        if !self.enabled {
            return Ok(grad_out.clone());
        }
        let s = Shape4::of(grad_out)?;
        let mut grad_in = Tensor::zeros(grad_out.shape().to_vec());
        let mut grad_logits = Tensor::zeros(vec![1, self.channels]);
        for c in 0..s.c {
            let w = cache.weights[c];
            let mut dw = 0.0;
            for n in 0..s.n {
                let base = (n * s.c + c) * s.h * s.w;
                for i in base..base + s.h * s.w {
                    let g = grad_out.data()[i];
                    grad_in.data_mut()[i] = g * w;
                    dw += g * cache.x.data()[i];
                }
            }
            let sd = Activation::Sigmoid.derivative(cache.logits.data()[c]);
            grad_logits.data_mut()[c] = dw * sd;
        }
        self.fc.backward(&cache.snr_input, &grad_logits)?;
        Ok(grad_in)
    }

    pub fn zero_grad(&mut self) {
        self.fc.zero_grad();
    }
}
