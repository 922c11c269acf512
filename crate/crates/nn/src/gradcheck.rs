use crate::tensor::Tensor;

/// Central finite difference of a scalar loss w.r.t. every element of one
/// tensor. `loss` is re-evaluated with the perturbed tensor each probe.
pub fn finite_difference<F>(param: &mut Tensor, h: f64, mut loss: F) -> Vec<f64>
where
    F: FnMut(&Tensor) -> f64,
{
    let n = param.len();
    let mut grad = vec![0.0; n];
    for i in 0..n {
        let orig = param.data()[i];
        param.data_mut()[i] = orig + h;
        let up = loss(param);
        param.data_mut()[i] = orig - h;
        let down = loss(param);
        param.data_mut()[i] = orig;
        grad[i] = (up - down) / (2.0 * h);
    }
    grad
}

/// Worst relative error between an analytic gradient and its finite
/// difference counterpart: |a - f| / max(floor, |a| + |f|).
pub fn max_relative_error(analytic: &[f64], fd: &[f64], floor: f64) -> f64 {
    assert_eq!(analytic.len(), fd.len());
    analytic
        .iter()
        .zip(fd)
        .map(|(&a, &f)| (a - f).abs() / floor.max(a.abs() + f.abs()))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_quadratic_gradient() {
        let mut p = Tensor::new(vec![3], vec![1.0, -2.0, 0.5]).unwrap();
        let fd = finite_difference(&mut p, 1e-5, |t| t.iter().map(|v| v * v).sum());
        let analytic: Vec<f64> = p.iter().map(|v| 2.0 * v).collect();
        assert!(max_relative_error(&analytic, &fd, 1e-8) < 1e-8);
    }

    #[test]
    fn probe_restores_parameter_values() {
        let mut p = Tensor::new(vec![2], vec![0.25, -0.75]).unwrap();
        let before = p.data().to_vec();
        finite_difference(&mut p, 1e-4, |t| t.data()[0] * t.data()[1]);
        assert_eq!(p.data(), before.as_slice());
    }

    #[test]
    fn relative_error_uses_absolute_floor() {
        // Both gradients are ~0; the floor keeps the ratio finite.
        let e = max_relative_error(&[0.0], &[1e-12], 1e-8);
        assert!(e < 1e-3);
    }
}
