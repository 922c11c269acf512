use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};

/// Static shape of the codec: four stride-2 encoder stages (two plain
/// convolutional, two residual), a mirrored decoder, and a shared codebook
/// whose vectors live in the final encoder width.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodecConfig {
    pub in_channels: usize,
    /// Output width of each encoder stage; the last entry is the latent
    /// (and codebook) dimension.
    pub widths: [usize; 4],
    pub codebook_size: usize,
    pub commitment_beta: f64,
    /// When false the SNR gates become identity maps.
    pub attention: bool,
}

impl Default for CodecConfig {
    fn default() -> Self {
        Self {
            in_channels: 3,
            widths: [32, 64, 64, 64],
            codebook_size: 512,
            commitment_beta: 0.25,
            attention: true,
        }
    }
}

impl CodecConfig {
    /// Narrow preset that keeps tests and smoke training fast.
    pub fn tiny(codebook_size: usize) -> Self {
        Self {
            in_channels: 3,
            widths: [8, 12, 12, 12],
            codebook_size,
            commitment_beta: 0.25,
            attention: true,
        }
    }

    pub fn latent_dim(&self) -> usize {
        self.widths[3]
    }

    /// Spatial shrink factor from input to latent grid.
    pub const DOWNSAMPLE: usize = 16;

    pub fn validate(&self) -> Result<()> {
        if self.in_channels == 0 || self.widths.iter().any(|&w| w == 0) {
            return Err(CoreError::InvalidInput(
                "codec channel widths must be positive".into(),
            ));
        }
        if self.codebook_size < 2 {
            return Err(CoreError::InvalidInput(format!(
                "codebook needs at least 2 entries, got {}",
                self.codebook_size
            )));
        }
        if !(self.commitment_beta >= 0.0) {
            return Err(CoreError::InvalidInput(format!(
                "commitment weight must be non-negative, got {}",
                self.commitment_beta
            )));
        }
        Ok(())
    }

    /// Checks that an input of this size survives four halvings exactly.
    pub fn check_input_size(&self, h: usize, w: usize) -> Result<(usize, usize)> {
        let d = Self::DOWNSAMPLE;
        if h == 0 || w == 0 || h % d != 0 || w % d != 0 {
            return Err(CoreError::InvalidInput(format!(
                "input {h}x{w} must be a positive multiple of {d} in both dimensions"
            )));
        }
        Ok((h / d, w / d))
    }
}
