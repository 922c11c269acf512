use crate::tensor::Tensor;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Kaiming-uniform fill over U[-b, b] with b = sqrt(6 / fan_in).
pub fn kaiming_uniform(shape: Vec<usize>, fan_in: usize, rng: &mut ChaCha8Rng) -> Tensor {
    let bound = (6.0 / fan_in.max(1) as f64).sqrt();
    Tensor::from_fn(shape, |_| rng.gen_range(-bound..bound))
}

/// Uniform fill over U[lo, hi], used for codebook initialization.
pub fn uniform(shape: Vec<usize>, lo: f64, hi: f64, rng: &mut ChaCha8Rng) -> Tensor {
    Tensor::from_fn(shape, |_| rng.gen_range(lo..hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn kaiming_respects_fan_in_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let fan_in = 3 * 3 * 3;
        let t = kaiming_uniform(vec![16, 3, 3, 3], fan_in, &mut rng);
        let bound = (6.0 / fan_in as f64).sqrt();
        for &v in t.data() {
            assert!(v.abs() < bound);
        }
        // A seeded fill is reproducible.
        let mut rng2 = ChaCha8Rng::seed_from_u64(1);
        let t2 = kaiming_uniform(vec![16, 3, 3, 3], fan_in, &mut rng2);
        assert_eq!(t.data(), t2.data());
    }

    #[test]
    fn uniform_stays_in_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let t = uniform(vec![64], -0.25, 0.25, &mut rng);
        for &v in t.data() {
            assert!(v >= -0.25 && v < 0.25);
        }
    }
}
