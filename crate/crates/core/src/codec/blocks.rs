use crate::error::Result;
use scmap_nn::{Activation, BatchNorm2d, BnCache, Conv2d, ConvTranspose2d, Tensor};
use rand_chacha::ChaCha8Rng;

/// conv(k3 s2 p1) -> batchnorm -> relu. Halves both spatial dims.
#[derive(Debug, Clone)]
pub struct ConvDown {
    pub conv: Conv2d,
    pub bn: BatchNorm2d,
}

#[derive(Debug, Clone)]
pub struct ConvDownCache {
    x: Tensor,
    bn: BnCache,
    pre_relu: Tensor,
}

impl ConvDown {
    pub fn new(inc: usize, outc: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        Ok(Self {
            conv: Conv2d::new(inc, outc, 3, 2, 1, rng)?,
            bn: BatchNorm2d::new(outc),
        })
    }

    pub fn forward_train(&mut self, x: &Tensor) -> Result<(Tensor, ConvDownCache)> {
        let c = self.conv.forward(x)?;
        let (pre_relu, bn) = self.bn.forward_train(&c)?;
        let y = Activation::Relu.forward(&pre_relu);
        Ok((
            y,
            ConvDownCache {
                x: x.clone(),
                bn,
                pre_relu,
            },
        ))
    }

    pub fn forward_eval(&self, x: &Tensor) -> Result<Tensor> {
        let c = self.conv.forward(x)?;
        let b = self.bn.forward_eval(&c)?;
        Ok(Activation::Relu.forward(&b))
    }

    pub fn backward(&mut self, cache: &ConvDownCache, grad_out: &Tensor) -> Result<Tensor> {
        let g = Activation::Relu.backward(&cache.pre_relu, grad_out);
        let g = self.bn.backward(&cache.bn, &g)?;
        Ok(self.conv.backward(&cache.x, &g)?)
    }
}

/// Residual downsampling block. Main path conv(s2)-bn-relu-conv(s1)-bn,
/// skip path a strided 1x1 conv, relu after the sum.
#[derive(Debug, Clone)]
pub struct ResDown {
    pub c1: Conv2d,
    pub b1: BatchNorm2d,
    pub c2: Conv2d,
    pub b2: BatchNorm2d,
    pub skip: Conv2d,
}

#[derive(Debug, Clone)]
pub struct ResDownCache {
    x: Tensor,
    b1: BnCache,
    a1: Tensor,
    r1: Tensor,
    b2: BnCache,
    sum: Tensor,
}

impl ResDown {
    pub fn new(inc: usize, outc: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        Ok(Self {
            c1: Conv2d::new(inc, outc, 3, 2, 1, rng)?,
            b1: BatchNorm2d::new(outc),
            c2: Conv2d::new(outc, outc, 3, 1, 1, rng)?,
            b2: BatchNorm2d::new(outc),
            skip: Conv2d::new(inc, outc, 1, 2, 0, rng)?,
        })
    }

    pub fn forward_train(&mut self, x: &Tensor) -> Result<(Tensor, ResDownCache)> {
        let c1 = self.c1.forward(x)?;
        let (a1, b1) = self.b1.forward_train(&c1)?;
        let r1 = Activation::Relu.forward(&a1);
        let c2 = self.c2.forward(&r1)?;
        let (m, b2) = self.b2.forward_train(&c2)?;
        let s = self.skip.forward(x)?;
        let mut sum = m;
        for (v, sv) in sum.data_mut().iter_mut().zip(s.iter()) {
            *v += sv;
        }
        let y = Activation::Relu.forward(&sum);
        Ok((
            y,
            ResDownCache {
                x: x.clone(),
                b1,
                a1,
                r1,
                b2,
                sum,
            },
        ))
    }

    pub fn forward_eval(&self, x: &Tensor) -> Result<Tensor> {
        let r1 = Activation::Relu.forward(&self.b1.forward_eval(&self.c1.forward(x)?)?);
        let m = self.b2.forward_eval(&self.c2.forward(&r1)?)?;
        let s = self.skip.forward(x)?;
        let mut sum = m;
        for (v, sv) in sum.data_mut().iter_mut().zip(s.iter()) {
            *v += sv;
        }
        Ok(Activation::Relu.forward(&sum))
    }

    pub fn backward(&mut self, cache: &ResDownCache, grad_out: &Tensor) -> Result<Tensor> {
        let g_sum = Activation::Relu.backward(&cache.sum, grad_out);
        // Skip branch.
        let mut gx = self.skip.backward(&cache.x, &g_sum)?;
        // Main branch.
        let g = self.b2.backward(&cache.b2, &g_sum)?;
        let g = self.c2.backward(&cache.r1, &g)?;
        let g = Activation::Relu.backward(&cache.a1, &g);
        let g = self.b1.backward(&cache.b1, &g)?;
        let g_main = self.c1.backward(&cache.x, &g)?;
        for (v, m) in gx.data_mut().iter_mut().zip(g_main.iter()) {
            *v += m;
        }
        Ok(gx)
    }
}

/// Residual upsampling block. Main path deconv(k4 s2 p1)-bn-relu-conv(s1)-bn,
/// skip path deconv(k2 s2), relu after the sum. Doubles both spatial dims.
#[derive(Debug, Clone)]
pub struct ResUp {
    pub t1: ConvTranspose2d,
    pub b1: BatchNorm2d,
    pub c2: Conv2d,
    pub b2: BatchNorm2d,
    pub skip: ConvTranspose2d,
}

#[derive(Debug, Clone)]
pub struct ResUpCache {
    x: Tensor,
    b1: BnCache,
    a1: Tensor,
    r1: Tensor,
    b2: BnCache,
    sum: Tensor,
}

impl ResUp {
    pub fn new(inc: usize, outc: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        Ok(Self {
            t1: ConvTranspose2d::new(inc, outc, 4, 2, 1, rng)?,
            b1: BatchNorm2d::new(outc),
            c2: Conv2d::new(outc, outc, 3, 1, 1, rng)?,
            b2: BatchNorm2d::new(outc),
            skip: ConvTranspose2d::new(inc, outc, 2, 2, 0, rng)?,
        })
    }

    pub fn forward_train(&mut self, x: &Tensor) -> Result<(Tensor, ResUpCache)> {
        let t1 = self.t1.forward(x)?;
        let (a1, b1) = self.b1.forward_train(&t1)?;
        let r1 = Activation::Relu.forward(&a1);
        let c2 = self.c2.forward(&r1)?;
        let (m, b2) = self.b2.forward_train(&c2)?;
        let s = self.skip.forward(x)?;
        let mut sum = m;
        for (v, sv) in sum.data_mut().iter_mut().zip(s.iter()) {
            *v += sv;
        }
        let y = Activation::Relu.forward(&sum);
        Ok((
            y,
            ResUpCache {
                x: x.clone(),
                b1,
                a1,
                r1,
                b2,
                sum,
            },
        ))
    }

    pub fn forward_eval(&self, x: &Tensor) -> Result<Tensor> {
        let r1 = Activation::Relu.forward(&self.b1.forward_eval(&self.t1.forward(x)?)?);
        let m = self.b2.forward_eval(&self.c2.forward(&r1)?)?;
        let s = self.skip.forward(x)?;
        let mut sum = m;
        for (v, sv) in sum.data_mut().iter_mut().zip(s.iter()) {
            *v += sv;
        }
        Ok(Activation::Relu.forward(&sum))
    }

    pub fn backward(&mut self, cache: &ResUpCache, grad_out: &Tensor) -> Result<Tensor> {
        let g_sum = Activation::Relu.backward(&cache.sum, grad_out);
        let mut gx = self.skip.backward(&cache.x, &g_sum)?;
        let g = self.b2.backward(&cache.b2, &g_sum)?;
        let g = self.c2.backward(&cache.r1, &g)?;
        let g = Activation::Relu.backward(&cache.a1, &g);
        let g = self.b1.backward(&cache.b1, &g)?;
        let g_main = self.t1.backward(&cache.x, &g)?;
        for (v, m) in gx.data_mut().iter_mut().zip(g_main.iter()) {
            *v += m;
        }
        Ok(gx)
    }
}

/// deconv(k4 s2 p1) -> batchnorm -> relu. Doubles both spatial dims.
#[derive(Debug, Clone)]
pub struct ConvUp {
    pub t: ConvTranspose2d,
    pub bn: BatchNorm2d,
}

#[derive(Debug, Clone)]
pub struct ConvUpCache {
    x: Tensor,
    bn: BnCache,
    pre_relu: Tensor,
}

impl ConvUp {
    pub fn new(inc: usize, outc: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        Ok(Self {
            t: ConvTranspose2d::new(inc, outc, 4, 2, 1, rng)?,
            bn: BatchNorm2d::new(outc),
        })
    }

    pub fn forward_train(&mut self, x: &Tensor) -> Result<(Tensor, ConvUpCache)> {
        let t = self.t.forward(x)?;
        let (pre_relu, bn) = self.bn.forward_train(&t)?;
        let y = Activation::Relu.forward(&pre_relu);
        Ok((
            y,
            ConvUpCache {
                x: x.clone(),
                bn,
                pre_relu,
            },
        ))
    }

    pub fn forward_eval(&self, x: &Tensor) -> Result<Tensor> {
        let t = self.t.forward(x)?;
        let b = self.bn.forward_eval(&t)?;
        Ok(Activation::Relu.forward(&b))
    }

    pub fn backward(&mut self, cache: &ConvUpCache, grad_out: &Tensor) -> Result<Tensor> {
        let g = Activation::Relu.backward(&cache.pre_relu, grad_out);
        let g = self.bn.backward(&cache.bn, &g)?;
        Ok(self.t.backward(&cache.x, &g)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use scmap_nn::gradcheck::{finite_difference, max_relative_error};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn shapes_halve_and_double() {
        let mut r = rng(1);
        let x = Tensor::zeros(vec![1, 3, 16, 16]);
        let mut down = ConvDown::new(3, 8, &mut r).unwrap();
        let (y, _) = down.forward_train(&x).unwrap();
        assert_eq!(y.shape(), &[1, 8, 8, 8]);

        let mut res = ResDown::new(8, 8, &mut r).unwrap();
        let (y2, _) = res.forward_train(&y).unwrap();
        assert_eq!(y2.shape(), &[1, 8, 4, 4]);

        let mut up = ResUp::new(8, 8, &mut r).unwrap();
        let (y3, _) = up.forward_train(&y2).unwrap();
        assert_eq!(y3.shape(), &[1, 8, 8, 8]);

        let mut cu = ConvUp::new(8, 3, &mut r).unwrap();
        let (y4, _) = cu.forward_train(&y3).unwrap();
        assert_eq!(y4.shape(), &[1, 3, 16, 16]);
    }

    #[test]
    fn res_down_input_gradient_checks() {
        let mut r = rng(2);
        let mut blk = ResDown::new(2, 3, &mut r).unwrap();
        let mut x = Tensor::from_fn(vec![1, 2, 8, 8], |i| ((i * 13) % 17) as f64 * 0.1 - 0.8);
        let (y, cache) = blk.forward_train(&x).unwrap();
        let proj = Tensor::from_fn(y.shape().to_vec(), |i| ((i * 5) % 13) as f64 * 0.1 - 0.6);
        let gx = blk.backward(&cache, &proj).unwrap();

        let mut probe = blk.clone();
        let fd = finite_difference(&mut x, 1e-5, |t| {
            probe.forward_train(t).unwrap().0.dot(&proj)
        });
        assert!(max_relative_error(gx.data(), &fd, 1e-7) < 1e-5);
    }

    #[test]
    fn res_up_input_gradient_checks() {
        let mut r = rng(3);
        let mut blk = ResUp::new(3, 2, &mut r).unwrap();
        let mut x = Tensor::from_fn(vec![1, 3, 4, 4], |i| ((i * 11) % 19) as f64 * 0.1 - 0.9);
        let (y, cache) = blk.forward_train(&x).unwrap();
        let proj = Tensor::from_fn(y.shape().to_vec(), |i| ((i * 7) % 11) as f64 * 0.1 - 0.5);
        let gx = blk.backward(&cache, &proj).unwrap();

        let mut probe = blk.clone();
        let fd = finite_difference(&mut x, 1e-5, |t| {
            probe.forward_train(t).unwrap().0.dot(&proj)
        });
        assert!(max_relative_error(gx.data(), &fd, 1e-7) < 1e-5);
    }

    #[test]
    fn eval_uses_running_statistics() {
        let mut r = rng(4);
        let mut blk = ConvDown::new(1, 2, &mut r).unwrap();
        let x = Tensor::from_fn(vec![2, 1, 4, 4], |i| (i as f64 * 0.3).sin());
        // Eval before any training is a hard error from the norm layer.
        assert!(blk.forward_eval(&x).is_err());
        blk.forward_train(&x).unwrap();
        blk.forward_eval(&x).unwrap();
    }
}
