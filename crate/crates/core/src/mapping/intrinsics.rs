//! Pinhole camera intrinsics, loadable from a JSON config file.

use crate::error::{CoreError, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Pinhole projection parameters plus the raw-depth scale factor.
///
/// `depth_scale` is the number of raw sensor units per meter, so a raw
/// reading `d` means `d / depth_scale` meters along the optical axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub depth_scale: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, depth_scale: f64) -> Result<Self> {
        let intr = Self {
            fx,
            fy,
            cx,
            cy,
            depth_scale,
        };
        intr.validate()?;
        Ok(intr)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(CoreError::InvalidInput(format!(
                "focal lengths must be positive, got fx={} fy={}",
                self.fx, self.fy
            )));
        }
        if !(self.depth_scale > 0.0) {
            return Err(CoreError::InvalidInput(format!(
                "depth_scale must be positive, got {}",
                self.depth_scale
            )));
        }
        if !(self.cx.is_finite() && self.cy.is_finite()) {
            return Err(CoreError::InvalidInput(
                "principal point must be finite".into(),
            ));
        }
        Ok(())
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let intr: Self = serde_json::from_str(&text)?;
        intr.validate()?;
        Ok(intr)
    }

    /// TUM-convention defaults for a 640x480 Kinect-class sensor.
    pub fn tum_default() -> Self {
        Self {
            fx: 525.0,
            fy: 525.0,
            cx: 319.5,
            cy: 239.5,
            depth_scale: 5000.0,
        }
    }

    /// Same field of view as [`tum_default`] scaled down to `w` x `h`.
    pub fn scaled_to(w: usize, h: usize) -> Self {
        let sx = w as f64 / 640.0;
        let sy = h as f64 / 480.0;
        Self {
            fx: 525.0 * sx,
            fy: 525.0 * sy,
            cx: (w as f64 - 1.0) / 2.0,
            cy: (h as f64 - 1.0) / 2.0,
            depth_scale: 5000.0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_positive_parameters() {
        assert!(CameraIntrinsics::new(525.0, 525.0, 319.5, 239.5, 5000.0).is_ok());
    }

    #[test]
    fn rejects_nonpositive_focal_or_scale() {
        assert!(CameraIntrinsics::new(0.0, 525.0, 319.5, 239.5, 5000.0).is_err());
        assert!(CameraIntrinsics::new(525.0, -1.0, 319.5, 239.5, 5000.0).is_err());
        assert!(CameraIntrinsics::new(525.0, 525.0, 319.5, 239.5, 0.0).is_err());
    }

    #[test]
    fn json_round_trip_preserves_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("intrinsics.json");
        let intr = CameraIntrinsics::tum_default();
        std::fs::write(&path, serde_json::to_string(&intr).unwrap()).unwrap();
        let loaded = CameraIntrinsics::from_json_file(&path).unwrap();
        assert_eq!(loaded, intr);
    }
}
