use crate::error::{CoreError, Result};
use nalgebra::{Point3, UnitQuaternion, Vector3};
use scmap_nn::Tensor;

/// Color image in planar CHW order, values in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct RgbFrame {
    pub timestamp: f64,
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl RgbFrame {
    pub fn new(timestamp: f64, width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != 3 * width * height {
            return Err(CoreError::InvalidInput(format!(
                "rgb frame {width}x{height} needs {} samples, got {}",
                3 * width * height,
                data.len()
            )));
        }
        Ok(Self {
            timestamp,
            width,
            height,
            data,
        })
    }

    pub fn pixel(&self, u: usize, v: usize) -> [f64; 3] {
        let plane = self.width * self.height;
        let i = v * self.width + u;
        [self.data[i], self.data[plane + i], self.data[2 * plane + i]]
    }

    /// View as a batch-1 NCHW tensor.
    pub fn to_tensor(&self) -> Tensor {
        Tensor::new(vec![1, 3, self.height, self.width], self.data.clone())
            .expect("frame buffer length is validated on construction")
    }

    pub fn from_tensor(timestamp: f64, t: &Tensor) -> Result<Self> {
        let s = t.shape();
        if s.len() != 4 || s[0] != 1 || s[1] != 3 {
            return Err(CoreError::InvalidInput(format!(
                "expected [1, 3, h, w] tensor, got {s:?}"
            )));
        }
        Self::new(timestamp, s[3], s[2], t.data().to_vec())
    }
}

/// Depth image storing raw sensor values; `scale` converts raw to meters
/// (depth_m = raw / scale). Raw 0 marks a missing measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthFrame {
    pub timestamp: f64,
    pub width: usize,
    pub height: usize,
    pub scale: f64,
    pub raw: Vec<u16>,
}

impl DepthFrame {
    pub fn new(
        timestamp: f64,
        width: usize,
        height: usize,
        scale: f64,
        raw: Vec<u16>,
    ) -> Result<Self> {
        if raw.len() != width * height {
            return Err(CoreError::InvalidInput(format!(
                "depth frame {width}x{height} needs {} samples, got {}",
                width * height,
                raw.len()
            )));
        }
        if !(scale > 0.0) {
            return Err(CoreError::InvalidInput(format!(
                "depth scale must be positive, got {scale}"
            )));
        }
        Ok(Self {
            timestamp,
            width,
            height,
            scale,
            raw,
        })
    }

    pub fn raw_at(&self, u: usize, v: usize) -> u16 {
        self.raw[v * self.width + u]
    }

    /// Metric depth, or None where the sensor reported nothing.
    pub fn depth_m(&self, u: usize, v: usize) -> Option<f64> {
        match self.raw_at(u, v) {
            0 => None,
            d => Some(d as f64 / self.scale),
        }
    }
}

/// Per-pixel semantic labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelImage {
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u8>,
}

impl LabelImage {
    pub fn new(width: usize, height: usize, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(CoreError::InvalidInput(format!(
                "label image {width}x{height} needs {} entries, got {}",
                width * height,
                labels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn at(&self, u: usize, v: usize) -> u8 {
        self.labels[v * self.width + u]
    }
}

/// Camera-to-world rigid transform with its capture time.
#[derive(Debug, Clone, PartialEq)]
pub struct Pose {
    pub timestamp: f64,
    pub translation: Vector3<f64>,
    pub rotation: UnitQuaternion<f64>,
}

impl Pose {
    pub fn identity(timestamp: f64) -> Self {
        Self {
            timestamp,
            translation: Vector3::zeros(),
            rotation: UnitQuaternion::identity(),
        }
    }

    pub fn new(timestamp: f64, translation: Vector3<f64>, rotation: UnitQuaternion<f64>) -> Self {
        Self {
            timestamp,
            translation,
            rotation,
        }
    }

    /// Maps a point from the camera frame into the world frame.
    pub fn transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        self.rotation.transform_point(p) + self.translation
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rgb_round_trips_through_tensor() {
        let f = RgbFrame::new(1.5, 2, 2, (0..12).map(|i| i as f64 / 12.0).collect()).unwrap();
        let t = f.to_tensor();
        assert_eq!(t.shape(), &[1, 3, 2, 2]);
        let back = RgbFrame::from_tensor(1.5, &t).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn rgb_pixel_reads_planes() {
        let mut data = vec![0.0; 12];
        data[3] = 0.1; // r at (1,1) of 2x2
        data[4 + 3] = 0.2; // g
        data[8 + 3] = 0.3; // b
        let f = RgbFrame::new(0.0, 2, 2, data).unwrap();
        assert_eq!(f.pixel(1, 1), [0.1, 0.2, 0.3]);
    }

    #[test]
    fn depth_zero_is_missing() {
        let d = DepthFrame::new(0.0, 2, 1, 5000.0, vec![0, 10000]).unwrap();
        assert_eq!(d.depth_m(0, 0), None);
        assert_relative_eq!(d.depth_m(1, 0).unwrap(), 2.0);
    }

    #[test]
    fn frame_constructors_validate_lengths() {
        assert!(RgbFrame::new(0.0, 2, 2, vec![0.0; 11]).is_err());
        assert!(DepthFrame::new(0.0, 2, 2, 5000.0, vec![0; 3]).is_err());
        assert!(DepthFrame::new(0.0, 1, 1, 0.0, vec![0]).is_err());
        assert!(LabelImage::new(3, 1, vec![0; 2]).is_err());
    }

    #[test]
    fn pose_applies_rotation_then_translation() {
        let rot = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), std::f64::consts::FRAC_PI_2);
        let pose = Pose::new(0.0, Vector3::new(1.0, 0.0, 0.0), rot);
        let p = pose.transform_point(&Point3::new(1.0, 0.0, 0.0));
        assert_relative_eq!(p.x, 1.0, epsilon = 1e-12);
        assert_relative_eq!(p.y, 1.0, epsilon = 1e-12);
        assert_relative_eq!(p.z, 0.0, epsilon = 1e-12);
    }
}
