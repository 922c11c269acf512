//! Finite-difference validation of every analytic backward pass, alone and
//! composed. Losses are random linear functionals of the layer output so the
//! checks exercise each output element.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use scmap_nn::gradcheck::{finite_difference, max_relative_error};
use scmap_nn::{Activation, BatchNorm2d, Conv2d, ConvTranspose2d, Dense, Tensor};

const H: f64 = 1e-5;
const TOL: f64 = 1e-6;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_tensor(shape: Vec<usize>, r: &mut ChaCha8Rng) -> Tensor {
    Tensor::from_fn(shape, |_| r.gen_range(-1.0..1.0))
}

/// loss(y) = <proj, y>, whose gradient w.r.t. y is proj itself.
fn proj_for(shape: &[usize], r: &mut ChaCha8Rng) -> Tensor {
    random_tensor(shape.to_vec(), r)
}

#[test]
fn conv2d_gradients() {
    let mut r = rng(101);
    let mut conv = Conv2d::new(2, 3, 3, 2, 1, &mut r).unwrap();
    let mut x = random_tensor(vec![2, 2, 6, 6], &mut r);
    let y = conv.forward(&x).unwrap();
    let proj = proj_for(y.shape(), &mut r);

    conv.zero_grad();
    let gx = conv.backward(&x, &proj).unwrap();

    let c2 = conv.clone();
    let fd_w = finite_difference(&mut conv.weight, H, |w| {
        let c = Conv2d::from_weights(w.clone(), c2.bias.clone(), c2.stride, c2.padding).unwrap();
        c.forward(&x).unwrap().dot(&proj)
    });
    assert!(max_relative_error(conv.weight.grad().unwrap(), &fd_w, 1e-8) < TOL);

    let fd_b = finite_difference(&mut conv.bias, H, |b| {
        let c = Conv2d::from_weights(c2.weight.clone(), b.clone(), c2.stride, c2.padding).unwrap();
        c.forward(&x).unwrap().dot(&proj)
    });
    assert!(max_relative_error(conv.bias.grad().unwrap(), &fd_b, 1e-8) < TOL);

    let fd_x = finite_difference(&mut x, H, |t| c2.forward(t).unwrap().dot(&proj));
    assert!(max_relative_error(gx.data(), &fd_x, 1e-8) < TOL);
}

#[test]
fn conv_transpose2d_gradients() {
    let mut r = rng(102);
    let mut tr = ConvTranspose2d::new(3, 2, 4, 2, 1, &mut r).unwrap();
    let mut x = random_tensor(vec![1, 3, 4, 4], &mut r);
    let y = tr.forward(&x).unwrap();
    assert_eq!(y.shape(), &[1, 2, 8, 8]);
    let proj = proj_for(y.shape(), &mut r);

    tr.zero_grad();
    let gx = tr.backward(&x, &proj).unwrap();

    let t2 = tr.clone();
    let fd_w = finite_difference(&mut tr.weight, H, |w| {
        let t = ConvTranspose2d::from_weights(w.clone(), t2.bias.clone(), t2.stride, t2.padding)
            .unwrap();
        t.forward(&x).unwrap().dot(&proj)
    });
    assert!(max_relative_error(tr.weight.grad().unwrap(), &fd_w, 1e-8) < TOL);

    let fd_b = finite_difference(&mut tr.bias, H, |b| {
        let t = ConvTranspose2d::from_weights(t2.weight.clone(), b.clone(), t2.stride, t2.padding)
            .unwrap();
        t.forward(&x).unwrap().dot(&proj)
    });
    assert!(max_relative_error(tr.bias.grad().unwrap(), &fd_b, 1e-8) < TOL);

    let fd_x = finite_difference(&mut x, H, |t| t2.forward(t).unwrap().dot(&proj));
    assert!(max_relative_error(gx.data(), &fd_x, 1e-8) < TOL);
}

#[test]
fn batchnorm_gradients() {
    let mut r = rng(103);
    let mut bn = BatchNorm2d::new(3);
    // Non-trivial affine parameters so their grads couple into dx.
    bn.gamma = random_tensor(vec![3], &mut r).map(|v| v + 1.5);
    bn.beta = random_tensor(vec![3], &mut r);
    let mut x = random_tensor(vec![2, 3, 4, 4], &mut r);
    let (y, cache) = bn.forward_train(&x).unwrap();
    let proj = proj_for(y.shape(), &mut r);

    bn.zero_grad();
    let gx = bn.backward(&cache, &proj).unwrap();

    let mut bn_probe = bn.clone();
    let fd_x = finite_difference(&mut x, H, |t| {
        bn_probe.forward_train(t).unwrap().0.dot(&proj)
    });
    assert!(max_relative_error(gx.data(), &fd_x, 1e-8) < TOL);

    let gamma0 = bn.gamma.clone();
    let fd_gamma = finite_difference(&mut bn.gamma.clone(), H, |g| {
        let mut b = bn.clone();
        b.gamma = g.clone();
        b.forward_train(&x).unwrap().0.dot(&proj)
    });
    bn.gamma = gamma0;
    assert!(max_relative_error(bn.gamma.grad().unwrap(), &fd_gamma, 1e-8) < TOL);

    let fd_beta = finite_difference(&mut bn.beta.clone(), H, |bt| {
        let mut b = bn.clone();
        b.beta = bt.clone();
        b.forward_train(&x).unwrap().0.dot(&proj)
    });
    assert!(max_relative_error(bn.beta.grad().unwrap(), &fd_beta, 1e-8) < TOL);
}

#[test]
fn dense_gradients() {
    let mut r = rng(104);
    let mut d = Dense::new(5, 3, &mut r);
    let mut x = random_tensor(vec![4, 5], &mut r);
    let y = d.forward(&x).unwrap();
    let proj = proj_for(y.shape(), &mut r);

    d.zero_grad();
    let gx = d.backward(&x, &proj).unwrap();

    let d2 = d.clone();
    let fd_w = finite_difference(&mut d.weight, H, |w| {
        let l = Dense::from_weights(w.clone(), d2.bias.clone()).unwrap();
        l.forward(&x).unwrap().dot(&proj)
    });
    assert!(max_relative_error(d.weight.grad().unwrap(), &fd_w, 1e-8) < TOL);

    let fd_b = finite_difference(&mut d.bias, H, |b| {
        let l = Dense::from_weights(d2.weight.clone(), b.clone()).unwrap();
        l.forward(&x).unwrap().dot(&proj)
    });
    assert!(max_relative_error(d.bias.grad().unwrap(), &fd_b, 1e-8) < TOL);

    let fd_x = finite_difference(&mut x, H, |t| d2.forward(t).unwrap().dot(&proj));
    assert!(max_relative_error(gx.data(), &fd_x, 1e-8) < TOL);
}

#[test]
fn activation_gradients_through_composition() {
    // conv -> relu -> tanh-ish head. Checks the chain rule across layers,
    // avoiding relu kinks by keeping probes away from zero crossings.
    let mut r = rng(105);
    let conv = Conv2d::new(1, 2, 3, 1, 1, &mut r).unwrap();
    let mut x = random_tensor(vec![1, 1, 5, 5], &mut r).map(|v| v + 3.0);

    let forward = |conv: &Conv2d, x: &Tensor, proj: &Tensor| -> f64 {
        let a = conv.forward(x).unwrap();
        let b = Activation::Relu.forward(&a);
        let c = Activation::Tanh.forward(&b);
        c.dot(proj)
    };

    let a = conv.forward(&x).unwrap();
    let proj = proj_for(a.shape(), &mut r);

    let b = Activation::Relu.forward(&a);
    let g_c = Activation::Tanh.backward(&b, &proj);
    let g_b = Activation::Relu.backward(&a, &g_c);
    let mut conv_m = conv.clone();
    conv_m.zero_grad();
    let gx = conv_m.backward(&x, &g_b).unwrap();

    let fd_x = finite_difference(&mut x, H, |t| forward(&conv, t, &proj));
    assert!(max_relative_error(gx.data(), &fd_x, 1e-8) < TOL);

    let c2 = conv.clone();
    let fd_w = finite_difference(&mut conv_m.weight.clone(), H, |w| {
        let c = Conv2d::from_weights(w.clone(), c2.bias.clone(), c2.stride, c2.padding).unwrap();
        forward(&c, &x, &proj)
    });
    assert!(max_relative_error(conv_m.weight.grad().unwrap(), &fd_w, 1e-8) < TOL);
}

#[test]
fn full_stack_gradient_with_batchnorm() {
    // conv -> bn(train) -> relu -> convT, FD on the input.
    let mut r = rng(106);
    let conv = Conv2d::new(2, 4, 3, 2, 1, &mut r).unwrap();
    let bn = BatchNorm2d::new(4);
    let up = ConvTranspose2d::new(4, 2, 4, 2, 1, &mut r).unwrap();
    let mut x = random_tensor(vec![1, 2, 8, 8], &mut r);

    let run = |x: &Tensor, proj: &Tensor| -> f64 {
        let mut bn = bn.clone();
        let a = conv.forward(x).unwrap();
        let (b, _) = bn.forward_train(&a).unwrap();
        let c = Activation::Relu.forward(&b);
        up.forward(&c).unwrap().dot(proj)
    };

    let a = conv.forward(&x).unwrap();
    let mut bn_fwd = bn.clone();
    let (b, cache) = bn_fwd.forward_train(&a).unwrap();
    let c = Activation::Relu.forward(&b);
    let y = up.forward(&c).unwrap();
    let proj = proj_for(y.shape(), &mut r);

    let mut up_m = up.clone();
    let g_c = up_m.backward(&c, &proj).unwrap();
    let g_b = Activation::Relu.backward(&b, &g_c);
    let mut bn_m = bn_fwd.clone();
    bn_m.zero_grad();
    let g_a = bn_m.backward(&cache, &g_b).unwrap();
    let mut conv_m = conv.clone();
    conv_m.zero_grad();
    let gx = conv_m.backward(&x, &g_a).unwrap();

    let fd_x = finite_difference(&mut x, H, |t| run(t, &proj));
    assert!(max_relative_error(gx.data(), &fd_x, 1e-8) < TOL);
}
