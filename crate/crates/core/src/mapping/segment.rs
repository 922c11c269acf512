//! Palette-based label assignment for reconstructed frames.
//!
//! Stands in for a learned segmenter on synthetic scenes: labels map to
//! fixed display colors, so the receiver recovers a label per pixel by
//! snapping to the nearest palette entry.

use crate::error::{CoreError, Result};
use crate::types::{LabelImage, RgbFrame};

/// Ordered list of label display colors, components in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct LabelPalette {
    colors: Vec<[f64; 3]>,
}

impl LabelPalette {
    pub fn new(colors: Vec<[f64; 3]>) -> Result<Self> {
        if colors.len() < 2 {
            return Err(CoreError::InvalidInput(format!(
                "palette needs at least 2 colors, got {}",
                colors.len()
            )));
        }
        if colors.len() > u8::MAX as usize + 1 {
            return Err(CoreError::InvalidInput(format!(
                "palette of {} colors exceeds the 8-bit label space",
                colors.len()
            )));
        }
        for (i, c) in colors.iter().enumerate() {
            if c.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(CoreError::InvalidInput(format!(
                    "palette color {i} has components outside [0, 1]: {c:?}"
                )));
            }
        }
        Ok(Self { colors })
    }

    /// A well-separated default palette for small synthetic label sets.
    pub fn standard(label_count: usize) -> Result<Self> {
        const BASE: [[f64; 3]; 8] = [
            [0.9, 0.1, 0.1],
            [0.9, 0.8, 0.1],
            [0.5, 0.2, 0.7],
            [0.1, 0.6, 0.9],
            [0.1, 0.8, 0.3],
            [0.9, 0.5, 0.1],
            [0.3, 0.3, 0.3],
            [0.8, 0.8, 0.8],
        ];
        if label_count > BASE.len() {
            return Err(CoreError::InvalidInput(format!(
                "standard palette covers up to {} labels, asked for {label_count}",
                BASE.len()
            )));
        }
        Self::new(BASE[..label_count].to_vec())
    }

    pub fn colors(&self) -> &[[f64; 3]] {
        &self.colors
    }

    pub fn label_count(&self) -> usize {
        self.colors.len()
    }

    pub fn color(&self, label: u8) -> Result<[f64; 3]> {
        self.colors
            .get(label as usize)
            .copied()
            .ok_or_else(|| {
                CoreError::InvalidInput(format!(
                    "label {label} out of range for {}-color palette",
                    self.colors.len()
                ))
            })
    }

    /// Nearest palette entry by squared RGB distance, lowest index on ties.
    pub fn classify(&self, rgb: [f64; 3]) -> u8 {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (i, c) in self.colors.iter().enumerate() {
            let mut d = 0.0;
            for k in 0..3 {
                let diff = rgb[k] - c[k];
                d += diff * diff;
            }
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best as u8
    }

    /// Classifies every pixel of a frame.
    pub fn segment(&self, frame: &RgbFrame) -> LabelImage {
        let mut labels = Vec::with_capacity(frame.width * frame.height);
        for v in 0..frame.height {
            for u in 0..frame.width {
                labels.push(self.classify(frame.pixel(u, v)));
            }
        }
        LabelImage::new(frame.width, frame.height, labels)
            .expect("label buffer sized from frame dims")
    }
}
