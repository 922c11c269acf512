use crate::error::{NnError, Result};
use crate::init;
use crate::tensor::{Shape4, Tensor};
use rand_chacha::ChaCha8Rng;

/// 2-D convolution over NCHW input. Weight layout is `[out_ch][in_ch][kh][kw]`.
#[derive(Debug, Clone)]
pub struct Conv2d {
    pub weight: Tensor,
    pub bias: Tensor,
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
}

impl Conv2d {
    pub fn new(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        if stride < 1 || kernel < 1 {
            return Err(NnError::InvalidConfig(format!(
                "conv2d requires kernel >= 1 and stride >= 1, got k={kernel} s={stride}"
            )));
        }
        let fan_in = in_channels * kernel * kernel;
        let weight = init::kaiming_uniform(
            vec![out_channels, in_channels, kernel, kernel],
            fan_in,
            rng,
        );
        Ok(Self {
            weight,
            bias: Tensor::zeros(vec![out_channels]),
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
        })
    }

    /// Builds a layer around an explicit kernel, mainly for tests and fixed 1x1 maps.
    pub fn from_weights(weight: Tensor, bias: Tensor, stride: usize, padding: usize) -> Result<Self> {
        let s = weight.shape();
        if s.len() != 4 || s[2] != s[3] {
            return Err(NnError::ShapeMismatch {
                op: "Conv2d::from_weights",
                expected: "[out][in][k][k] weight".into(),
                actual: format!("{s:?}"),
            });
        }
        if bias.shape() != [s[0]] {
            return Err(NnError::ShapeMismatch {
                op: "Conv2d::from_weights",
                expected: format!("[{}] bias", s[0]),
                actual: format!("{:?}", bias.shape()),
            });
        }
        Ok(Self {
            in_channels: s[1],
            out_channels: s[0],
            kernel: s[2],
            stride,
            padding,
            weight,
            bias,
        })
    }

    pub fn output_hw(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        let k = self.kernel;
        let p = self.padding;
        if h + 2 * p < k || w + 2 * p < k {
            return Err(NnError::ShapeMismatch {
                op: "conv2d",
                expected: format!("spatial dims >= {} after padding {p}", k),
                actual: format!("{h}x{w}"),
            });
        }
        Ok((
            (h + 2 * p - k) / self.stride + 1,
            (w + 2 * p - k) / self.stride + 1,
        ))
    }

    fn check_input(&self, x: &Tensor) -> Result<Shape4> {
        let s = Shape4::of(x)?;
        if s.c != self.in_channels {
            return Err(NnError::ShapeMismatch {
                op: "conv2d",
                expected: format!("{} input channels", self.in_channels),
                actual: format!("{} input channels", s.c),
            });
        }
        Ok(s)
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let s = self.check_input(x)?;
        let (oh, ow) = self.output_hw(s.h, s.w)?;
        let k = self.kernel;
        let (st, p) = (self.stride, self.padding);
        let mut y = Tensor::zeros(vec![s.n, self.out_channels, oh, ow]);
        let w = self.weight.data();
        let xd = x.data();
        let yd = y.data_mut();
        for n in 0..s.n {
            for oc in 0..self.out_channels {
                let b = self.bias.data()[oc];
                for r in 0..oh {
                    for col in 0..ow {
                        let mut acc = b;
                        for ic in 0..s.c {
                            for kh in 0..k {
                                let ih = r * st + kh;
                                if ih < p || ih - p >= s.h {
                                    continue;
                                }
                                let ih = ih - p;
                                for kw in 0..k {
                                    let iw = col * st + kw;
                                    if iw < p || iw - p >= s.w {
                                        continue;
                                    }
                                    let iw = iw - p;
                                    let xi = ((n * s.c + ic) * s.h + ih) * s.w + iw;
                                    let wi = ((oc * s.c + ic) * k + kh) * k + kw;
                                    acc += xd[xi] * w[wi];
                                }
                            }
                        }
                        yd[((n * self.out_channels + oc) * oh + r) * ow + col] = acc;
                    }
                }
            }
        }
        Ok(y)
    }

    /// Accumulates weight/bias grads and returns the input gradient.
    pub fn backward(&mut self, x: &Tensor, grad_out: &Tensor) -> Result<Tensor> {
        let s = self.check_input(x)?;
        let (oh, ow) = self.output_hw(s.h, s.w)?;
        let k = self.kernel;
        let (st, p) = (self.stride, self.padding);
        let go = Shape4::of(grad_out)?;
        if (go.n, go.c, go.h, go.w) != (s.n, self.out_channels, oh, ow) {
            return Err(NnError::ShapeMismatch {
                op: "conv2d backward",
                expected: format!("[{}, {}, {oh}, {ow}]", s.n, self.out_channels),
                actual: format!("{:?}", grad_out.shape()),
            });
        }
        let mut grad_in = Tensor::zeros(x.shape().to_vec());
        let god = grad_out.data();
        let xd = x.data();
        let wd = self.weight.data().to_vec();
        {
            let gw = self.weight.grad_mut();
            let gi = grad_in.data_mut();
            for n in 0..s.n {
                for oc in 0..self.out_channels {
                    for r in 0..oh {
                        for col in 0..ow {
                            let g = god[((n * self.out_channels + oc) * oh + r) * ow + col];
                            if g == 0.0 {
                                continue;
                            }
                            for ic in 0..s.c {
                                for kh in 0..k {
                                    let ih = r * st + kh;
                                    if ih < p || ih - p >= s.h {
                                        continue;
                                    }
                                    let ih = ih - p;
                                    for kw in 0..k {
                                        let iw = col * st + kw;
                                        if iw < p || iw - p >= s.w {
                                            continue;
                                        }
                                        let iw = iw - p;
                                        let xi = ((n * s.c + ic) * s.h + ih) * s.w + iw;
                                        let wi = ((oc * s.c + ic) * k + kh) * k + kw;
                                        gw[wi] += g * xd[xi];
                                        gi[xi] += g * wd[wi];
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        {
            let gb = self.bias.grad_mut();
            for n in 0..s.n {
                for oc in 0..self.out_channels {
                    let base = (n * self.out_channels + oc) * oh * ow;
                    let sum: f64 = god[base..base + oh * ow].iter().sum();
                    gb[oc] += sum;
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

/// Transposed 2-D convolution, the adjoint of `Conv2d` with matching geometry.
/// Weight layout is `[in_ch][out_ch][kh][kw]`.
#[derive(Debug, Clone)]
pub struct ConvTranspose2d {
    pub weight: Tensor,
    pub bias: Tensor,
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub padding: usize,
}

impl ConvTranspose2d {
    pub fn new(
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        if stride < 1 || kernel < 1 {
            return Err(NnError::InvalidConfig(format!(
                "conv_transpose2d requires kernel >= 1 and stride >= 1, got k={kernel} s={stride}"
            )));
        }
        let fan_in = in_channels * kernel * kernel;
        let weight = init::kaiming_uniform(
            vec![in_channels, out_channels, kernel, kernel],
            fan_in,
            rng,
        );
        Ok(Self {
            weight,
            bias: Tensor::zeros(vec![out_channels]),
            in_channels,
            out_channels,
            kernel,
            stride,
            padding,
        })
    }

    pub fn from_weights(weight: Tensor, bias: Tensor, stride: usize, padding: usize) -> Result<Self> {
        let s = weight.shape();
        if s.len() != 4 || s[2] != s[3] {
            return Err(NnError::ShapeMismatch {
                op: "ConvTranspose2d::from_weights",
                expected: "[in][out][k][k] weight".into(),
                actual: format!("{s:?}"),
            });
        }
        if bias.shape() != [s[1]] {
            return Err(NnError::ShapeMismatch {
                op: "ConvTranspose2d::from_weights",
                expected: format!("[{}] bias", s[1]),
                actual: format!("{:?}", bias.shape()),
            });
        }
        Ok(Self {
            in_channels: s[0],
            out_channels: s[1],
            kernel: s[2],
            stride,
            padding,
            weight,
            bias,
        })
    }

    pub fn output_hw(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        let grow = |d: usize| -> Result<usize> {
            let full = (d - 1) * self.stride + self.kernel;
            if full < 2 * self.padding + 1 {
                return Err(NnError::ShapeMismatch {
                    op: "conv_transpose2d",
                    expected: "output dims >= 1".into(),
                    actual: format!("input dim {d} with k={} s={} p={}", self.kernel, self.stride, self.padding),
                });
            }
            Ok(full - 2 * self.padding)
        };
        Ok((grow(h)?, grow(w)?))
    }

    fn check_input(&self, x: &Tensor) -> Result<Shape4> {
        let s = Shape4::of(x)?;
        if s.c != self.in_channels {
            return Err(NnError::ShapeMismatch {
                op: "conv_transpose2d",
                expected: format!("{} input channels", self.in_channels),
                actual: format!("{} input channels", s.c),
            });
        }
        Ok(s)
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let s = self.check_input(x)?;
        let (oh, ow) = self.output_hw(s.h, s.w)?;
        let k = self.kernel;
        let (st, p) = (self.stride, self.padding);
        let mut y = Tensor::zeros(vec![s.n, self.out_channels, oh, ow]);
        {
            let yd = y.data_mut();
            let xd = x.data();
            let wd = self.weight.data();
            for n in 0..s.n {
                for ic in 0..s.c {
                    for ih in 0..s.h {
                        for iw in 0..s.w {
                            let v = xd[((n * s.c + ic) * s.h + ih) * s.w + iw];
                            if v == 0.0 {
                                continue;
                            }
                            for oc in 0..self.out_channels {
                                for kh in 0..k {
                                    let r = ih * st + kh;
                                    if r < p || r - p >= oh {
                                        continue;
                                    }
                                    let r = r - p;
                                    for kw in 0..k {
                                        let c = iw * st + kw;
                                        if c < p || c - p >= ow {
                                            continue;
                                        }
                                        let c = c - p;
                                        let wi = ((ic * self.out_channels + oc) * k + kh) * k + kw;
                                        yd[((n * self.out_channels + oc) * oh + r) * ow + c] +=
                                            v * wd[wi];
                                    }
                                }
                            }
                        }
                    }
                }
            }
            for n in 0..s.n {
                for oc in 0..self.out_channels {
                    let b = self.bias.data()[oc];
                    if b == 0.0 {
                        continue;
                    }
                    let base = (n * self.out_channels + oc) * oh * ow;
                    for v in &mut yd[base..base + oh * ow] {
                        *v += b;
                    }
                }
            }
        }
        Ok(y)
    }

    pub fn backward(&mut self, x: &Tensor, grad_out: &Tensor) -> Result<Tensor> {
        let s = self.check_input(x)?;
        let (oh, ow) = self.output_hw(s.h, s.w)?;
        let go = Shape4::of(grad_out)?;
        if (go.n, go.c, go.h, go.w) != (s.n, self.out_channels, oh, ow) {
            return Err(NnError::ShapeMismatch {
                op: "conv_transpose2d backward",
                expected: format!("[{}, {}, {oh}, {ow}]", s.n, self.out_channels),
                actual: format!("{:?}", grad_out.shape()),
            });
        }
        let k = self.kernel;
        let (st, p) = (self.stride, self.padding);
        let mut grad_in = Tensor::zeros(x.shape().to_vec());
        let god = grad_out.data();
        let xd = x.data();
        let wd = self.weight.data().to_vec();
        {
            let gw = self.weight.grad_mut();
            let gi = grad_in.data_mut();
            for n in 0..s.n {
                for ic in 0..s.c {
                    for ih in 0..s.h {
                        for iw in 0..s.w {
                            let xi = ((n * s.c + ic) * s.h + ih) * s.w + iw;
                            let xv = xd[xi];
                            let mut acc = 0.0;
                            for oc in 0..self.out_channels {
                                for kh in 0..k {
                                    let r = ih * st + kh;
                                    if r < p || r - p >= oh {
                                        continue;
                                    }
                                    let r = r - p;
                                    for kw in 0..k {
                                        let c = iw * st + kw;
                                        if c < p || c - p >= ow {
                                            continue;
                                        }
                                        let c = c - p;
                                        let g = god[((n * self.out_channels + oc) * oh + r) * ow + c];
                                        let wi = ((ic * self.out_channels + oc) * k + kh) * k + kw;
                                        acc += g * wd[wi];
                                        gw[wi] += g * xv;
                                    }
                                }
                            }
                            gi[xi] += acc;
                        }
                    }
                }
            }
        }
        {
            let gb = self.bias.grad_mut();
            for n in 0..s.n {
                for oc in 0..self.out_channels {
                    let base = (n * self.out_channels + oc) * oh * ow;
                    let sum: f64 = god[base..base + oh * ow].iter().sum();
                    gb[oc] += sum;
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
