use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Sigmoid,
    Tanh,
}

impl Activation {
    pub fn forward(self, x: &Tensor) -> Tensor {
        x.map(|v| self.eval(v))
    }

    pub fn eval(self, v: f64) -> f64 {
        match self {
            Activation::Relu => v.max(0.0),
            Activation::Sigmoid => sigmoid(v),
            Activation::Tanh => v.tanh(),
        }
    }

    /// Gradient w.r.t. the pre-activation input `x`.
    pub fn backward(self, x: &Tensor, grad_out: &Tensor) -> Tensor {
        debug_assert_eq!(x.shape(), grad_out.shape());
        let mut grad = Tensor::zeros(x.shape().to_vec());
        let g = grad.data_mut();
        for i in 0..g.len() {
            g[i] = grad_out.data()[i] * self.derivative(x.data()[i]);
        }
        grad
    }

    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => {
                let s = sigmoid(x);
                s * (1.0 - s)
            }
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
        }
    }
}

pub fn sigmoid(v: f64) -> f64 {
    // Split on sign so exp never overflows.
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}
