pub mod ate;
pub mod timing;
pub mod trajectory;

pub use ate::{ate, rpe, AteReport, RpeReport};
pub use timing::{StageTimings, TimingReport};
pub use trajectory::{associate_poses, Trajectory};

/// Mean squared error between two equal-length sample sets.
pub fn mse(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "mse over mismatched lengths");
    if a.is_empty() {
        return 0.0;
    }
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        / a.len() as f64
}

/// Peak signal-to-noise ratio in dB for a given error power and peak value.
/// A zero error is reported as positive infinity.
pub fn psnr(mse: f64, max: f64) -> f64 {
    if mse <= 0.0 {
        return f64::INFINITY;
    }
    10.0 * ((max * max) / mse).log10()
}

pub fn psnr_between(a: &[f64], b: &[f64], max: f64) -> f64 {
    psnr(mse(a, b), max)
}

/// Source bits over transmitted payload bits for one frame, with the
/// source counted as 24-bit color.
pub fn compression_ratio(width: usize, height: usize, payload_bits: usize) -> f64 {
    if payload_bits == 0 {
        return f64::INFINITY;
    }
    (width * height * 24) as f64 / payload_bits as f64
}
