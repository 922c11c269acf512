use crate::error::{CoreError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Noise standard deviation for a signal of mean-square power `power` at the
/// given SNR: sigma = sqrt(power * 10^(-snr_db / 10)).
pub fn snr_db_to_sigma(snr_db: f64, power: f64) -> f64 {
    (power * 10f64.powf(-snr_db / 10.0)).sqrt()
}

pub fn mean_square(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64
}

/// Scales a symbol block to unit mean-square power. Returns the scaled block
/// and the gain that was applied.
pub fn power_normalize(x: &[f64]) -> Result<(Vec<f64>, f64)> {
    let p = mean_square(x);
    if !(p > 0.0) || !p.is_finite() {
        return Err(CoreError::InvalidInput(format!(
            "cannot normalize a block with mean-square power {p}"
        )));
    }
    let gain = 1.0 / p.sqrt();
    Ok((x.iter().map(|v| v * gain).collect(), gain))
}

/// Standard-normal stream via the Box-Muller transform over a counter-based
/// generator, so a seed pins the exact sample sequence on every platform.
#[derive(Debug, Clone)]
pub struct GaussianSource {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl GaussianSource {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    pub fn next_standard(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1] keeps the log finite; u2 in [0, 1).
        let u1: f64 = 1.0 - self.rng.gen::<f64>();
        let u2: f64 = self.rng.gen();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

/// Additive white Gaussian noise channel bound to one SNR and one noise
/// stream. Repeated calls continue the stream.
#[derive(Debug, Clone)]
pub struct Awgn {
    pub snr_db: f64,
    source: GaussianSource,
}

impl Awgn {
    pub fn new(snr_db: f64, seed: u64) -> Self {
        Self {
            snr_db,
            source: GaussianSource::from_seed(seed),
        }
    }

    /// y = x + n with n ~ N(0, sigma^2), sigma derived from the measured
    /// power of `x` and the channel SNR.
    pub fn apply(&mut self, x: &[f64]) -> Vec<f64> {
        let sigma = snr_db_to_sigma(self.snr_db, mean_square(x));
        x.iter()
            .map(|v| v + sigma * self.source.next_standard())
            .collect()
    }
}

/// One-shot channel pass with a fresh stream, for reproducible simulations.
pub fn awgn_apply(x: &[f64], snr_db: f64, seed: u64) -> Vec<f64> {
    Awgn::new(snr_db, seed).apply(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn sigma_matches_snr_definition() {
        assert_relative_eq!(snr_db_to_sigma(10.0, 1.0).powi(2), 0.1, epsilon = 1e-12);
        assert_relative_eq!(snr_db_to_sigma(0.0, 1.0), 1.0, epsilon = 1e-12);
        assert_relative_eq!(snr_db_to_sigma(20.0, 1.0).powi(2), 0.01, epsilon = 1e-12);
        // Sigma scales with the square root of signal power.
        assert_relative_eq!(
            snr_db_to_sigma(10.0, 4.0),
            2.0 * snr_db_to_sigma(10.0, 1.0),
            epsilon = 1e-12
        );
    }

    #[test]
    fn unit_power_block_is_a_fixed_point() {
        let x = vec![1.0, -1.0, 1.0, 1.0, -1.0, -1.0];
        let (y, gain) = power_normalize(&x).unwrap();
        assert_eq!(y, x);
        assert_eq!(gain, 1.0);
    }

    #[test]
    fn normalized_block_has_unit_mean_square() {
        let x: Vec<f64> = (0..97).map(|i| (i as f64 * 0.37).sin() * 3.0 + 0.2).collect();
        let (y, _) = power_normalize(&x).unwrap();
        assert_relative_eq!(mean_square(&y), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn zero_block_cannot_be_normalized() {
        assert!(power_normalize(&[0.0; 8]).is_err());
        assert!(power_normalize(&[]).is_err());
    }

    #[test]
    fn noise_is_reproducible_per_seed() {
        let x = vec![0.5; 64];
        let a = awgn_apply(&x, 10.0, 42);
        let b = awgn_apply(&x, 10.0, 42);
        let c = awgn_apply(&x, 10.0, 43);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn session_stream_differs_from_two_fresh_draws() {
        let x = vec![1.0; 32];
        let mut ch = Awgn::new(10.0, 7);
        let first = ch.apply(&x);
        let second = ch.apply(&x);
        assert_eq!(first, awgn_apply(&x, 10.0, 7));
        assert_ne!(first, second);
    }

    #[test]
    fn standard_normal_moments() {
        let mut src = GaussianSource::from_seed(1234);
        let n = 200_000;
        let samples: Vec<f64> = (0..n).map(|_| src.next_standard()).collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn noise_variance_tracks_snr() {
        let x = vec![1.0; 100_000];
        let y = awgn_apply(&x, 10.0, 5);
        let noise_var = y
            .iter()
            .zip(&x)
            .map(|(yo, xo)| (yo - xo) * (yo - xo))
            .sum::<f64>()
            / x.len() as f64;
        assert!((noise_var - 0.1).abs() < 0.005, "variance {noise_var}");
    }
}
