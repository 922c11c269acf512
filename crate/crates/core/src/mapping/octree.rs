//! Sparse semantic voxel map with Bayesian label fusion.
//!
//! Voxels exist only where evidence has been integrated. Each stored
//! voxel holds a probability distribution over the label set, updated
//! recursively from point observations.

use super::morton;
use crate::error::{CoreError, Result};
use nalgebra::Point3;
use std::collections::HashMap;

/// A world-frame point carrying a semantic label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabeledPoint {
    pub position: Point3<f64>,
    pub label: u8,
    pub confidence: f64,
}

/// Integer voxel coordinates (position divided by resolution, floored).
pub type VoxelCoord = (i32, i32, i32);

/// Sparse voxel store in Morton key order with per-voxel label posteriors.
///
/// Invariant: every stored probability vector sums to 1 within 1e-9 and
/// has exactly `label_count` entries.
#[derive(Debug, Clone)]
pub struct SemanticOctree {
    resolution: f64,
    label_count: usize,
    voxels: HashMap<u64, Vec<f64>>,
}

impl SemanticOctree {
    pub fn new(resolution: f64, label_count: usize) -> Result<Self> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(CoreError::InvalidInput(format!(
                "voxel resolution must be positive, got {resolution}"
            )));
        }
        if label_count < 2 {
            return Err(CoreError::InvalidInput(format!(
                "label fusion needs at least 2 labels, got {label_count}"
            )));
        }
        Ok(Self {
            resolution,
            label_count,
            voxels: HashMap::new(),
        })
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn label_count(&self) -> usize {
        self.label_count
    }

    pub fn len(&self) -> usize {
        self.voxels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voxels.is_empty()
    }

    /// Voxel coordinates containing a world point.
    pub fn quantize(&self, p: &Point3<f64>) -> VoxelCoord {
        let q = |v: f64| (v / self.resolution).floor() as i32;
        (q(p.x), q(p.y), q(p.z))
    }

    /// World-frame center of a voxel.
    pub fn voxel_center(&self, c: VoxelCoord) -> Point3<f64> {
        let m = |i: i32| (i as f64 + 0.5) * self.resolution;
        Point3::new(m(c.0), m(c.1), m(c.2))
    }

    pub fn probabilities(&self, c: VoxelCoord) -> Option<&[f64]> {
        let key = morton::encode(c.0, c.1, c.2)?;
        self.voxels.get(&key).map(Vec::as_slice)
    }

    /// Folds one labeled observation into the voxel containing the point.
    ///
    /// The update is the recursive Bayes step with a symmetric confusion
    /// model: the observed label has likelihood `hit_prob`, every other
    /// label shares the remaining mass equally. Untouched voxels start
    /// from the uniform prior.
    pub fn fuse_observation(&mut self, point: &LabeledPoint, hit_prob: f64) -> Result<()> {
        if !(hit_prob > 0.5 && hit_prob < 1.0) {
            return Err(CoreError::InvalidInput(format!(
                "hit probability must lie in (0.5, 1), got {hit_prob}"
            )));
        }
        if (point.label as usize) >= self.label_count {
            return Err(CoreError::InvalidInput(format!(
                "label {} out of range for {} labels",
                point.label, self.label_count
            )));
        }
        let c = self.quantize(&point.position);
        let key = morton::encode(c.0, c.1, c.2).ok_or_else(|| {
            CoreError::InvalidInput(format!(
                "point {:?} falls outside the representable voxel volume",
                point.position
            ))
        })?;
        let l = self.label_count;
        let probs = self
            .voxels
            .entry(key)
            .or_insert_with(|| vec![1.0 / l as f64; l]);
        let miss = (1.0 - hit_prob) / (l as f64 - 1.0);
        let mut sum = 0.0;
        for (i, p) in probs.iter_mut().enumerate() {
            *p *= if i == point.label as usize {
                hit_prob
            } else {
                miss
            };
            sum += *p;
        }
        for p in probs.iter_mut() {
            *p /= sum;
        }
        Ok(())
    }

    /// Index and posterior of the most likely label (lowest index on ties).
    pub fn most_likely(probs: &[f64]) -> (u8, f64) {
        let mut best = 0usize;
        for (i, &p) in probs.iter().enumerate() {
            if p > probs[best] {
                best = i;
            }
        }
        (best as u8, probs[best])
    }

    /// Voxels in ascending Morton key order: deterministic across runs.
    pub fn iter_sorted(&self) -> impl Iterator<Item = (VoxelCoord, &[f64])> {
        let mut keys: Vec<u64> = self.voxels.keys().copied().collect();
        keys.sort_unstable();
        keys.into_iter()
            .map(move |k| (morton::decode(k), self.voxels[&k].as_slice()))
    }
}

/// Convenience constructor for tests and callers that already have
/// world-frame coordinates.
pub fn labeled_point(x: f64, y: f64, z: f64, label: u8) -> LabeledPoint {
    LabeledPoint {
        position: Point3::new(x, y, z),
        label,
        confidence: 1.0,
    }
}

/// Rotates then translates every point by the pose.
pub fn transform_to_world(points: &mut [LabeledPoint], pose: &crate::types::Pose) {
    for p in points.iter_mut() {
        p.position = pose.transform_point(&p.position);
    }
}
