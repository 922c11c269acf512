//! Depth-image backprojection and per-pair map integration.

use super::intrinsics::CameraIntrinsics;
use super::octree::{LabeledPoint, SemanticOctree};
use crate::error::{CoreError, Result};
use crate::types::{DepthFrame, LabelImage, Pose};
use nalgebra::Point3;
use std::time::Instant;

/// Lifts sampled depth pixels into camera-frame labeled points.
///
/// Pixels are visited on a `stride`-spaced grid starting at (0, 0);
/// zero-depth readings carry no measurement and are skipped.
pub fn backproject(
    depth: &DepthFrame,
    labels: &LabelImage,
    intr: &CameraIntrinsics,
    stride: usize,
) -> Result<Vec<LabeledPoint>> {
    if depth.width != labels.width || depth.height != labels.height {
        return Err(CoreError::InvalidInput(format!(
            "depth {}x{} and label image {}x{} differ in size",
            depth.width, depth.height, labels.width, labels.height
        )));
    }
    if stride == 0 {
        return Err(CoreError::InvalidInput("stride must be at least 1".into()));
    }
    intr.validate()?;
    let mut points = Vec::new();
    for v in (0..depth.height).step_by(stride) {
        for u in (0..depth.width).step_by(stride) {
            let Some(z) = depth.depth_m(u, v) else {
                continue;
            };
            let x = (u as f64 - intr.cx) * z / intr.fx;
            let y = (v as f64 - intr.cy) * z / intr.fy;
            points.push(LabeledPoint {
                position: Point3::new(x, y, z),
                label: labels.at(u, v),
                confidence: 1.0,
            });
        }
    }
    Ok(points)
}

/// Counters and timing from integrating one aligned pair into the map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationStats {
    pub points: usize,
    pub new_voxels: usize,
    pub duration_s: f64,
}

/// Backprojects, transforms into the world frame, and fuses every point.
pub fn integrate_pair(
    map: &mut SemanticOctree,
    depth: &DepthFrame,
    labels: &LabelImage,
    pose: &Pose,
    intr: &CameraIntrinsics,
    stride: usize,
    hit_prob: f64,
) -> Result<IntegrationStats> {
    let start = Instant::now();
    let mut points = backproject(depth, labels, intr, stride)?;
    super::octree::transform_to_world(&mut points, pose);
    let before = map.len();
    for p in &points {
        map.fuse_observation(p, hit_prob)?;
    }
    Ok(IntegrationStats {
        points: points.len(),
        new_voxels: map.len() - before,
        duration_s: start.elapsed().as_secs_f64(),
    })
}
