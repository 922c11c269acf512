use crate::error::Result;
use crate::types::Pose;
use log::warn;
use nalgebra::{UnitQuaternion, Vector3};

/// Time-ordered pose sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    poses: Vec<Pose>,
}

impl Trajectory {
    pub fn new(mut poses: Vec<Pose>) -> Self {
        poses.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));
        Self { poses }
    }

    pub fn poses(&self) -> &[Pose] {
        &self.poses
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    /// Parses `timestamp tx ty tz qx qy qz qw` rows. Comment lines start
    /// with '#'; rows that do not parse are reported and skipped.
    pub fn parse_tum(text: &str, source_name: &str) -> Result<Self> {
        let mut poses = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match parse_pose_line(line) {
                Some(p) => poses.push(p),
                None => warn!(
                    "{source_name}:{}: skipping malformed pose row: {line}",
                    lineno + 1
                ),
            }
        }
        Ok(Self::new(poses))
    }

    pub fn to_tum_string(&self) -> String {
        let mut out = String::new();
        for p in &self.poses {
            let q = p.rotation.quaternion();
            out.push_str(&format!(
                "{:.6} {:.9} {:.9} {:.9} {:.9} {:.9} {:.9} {:.9}\n",
                p.timestamp, p.translation.x, p.translation.y, p.translation.z, q.i, q.j, q.k, q.w
            ));
        }
        out
    }

    /// Pose with timestamp nearest to `t`, if within `tol` seconds.
    pub fn nearest_within(&self, t: f64, tol: f64) -> Option<&Pose> {
        if self.poses.is_empty() {
            return None;
        }
        let idx = self
            .poses
            .partition_point(|p| p.timestamp < t)
            .min(self.poses.len() - 1);
        let mut best = idx;
        if idx > 0 && (self.poses[idx - 1].timestamp - t).abs() < (self.poses[best].timestamp - t).abs()
        {
            best = idx - 1;
        }
        let p = &self.poses[best];
        if (p.timestamp - t).abs() <= tol {
            Some(p)
        } else {
            None
        }
    }
}

fn parse_pose_line(line: &str) -> Option<Pose> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 8 {
        return None;
    }
    let mut v = [0.0f64; 8];
    for (slot, f) in v.iter_mut().zip(&fields) {
        *slot = f.parse().ok()?;
        if !slot.is_finite() {
            return None;
        }
    }
    let quat = nalgebra::Quaternion::new(v[7], v[4], v[5], v[6]);
    if quat.norm() < 1e-12 {
        return None;
    }
    Some(Pose::new(
        v[0],
        Vector3::new(v[1], v[2], v[3]),
        UnitQuaternion::from_quaternion(quat),
    ))
}

/// Greedy nearest-timestamp pairing: reference poses are visited in time
/// order and each claims its closest unclaimed candidate within `tol`
/// seconds. Returns (reference index, candidate index) pairs.
pub fn associate_poses(reference: &Trajectory, candidate: &Trajectory, tol: f64) -> Vec<(usize, usize)> {
    let mut used = vec![false; candidate.len()];
    let mut pairs = Vec::new();
    for (i, p) in reference.poses().iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (j, q) in candidate.poses().iter().enumerate() {
            if used[j] {
                continue;
            }
            let dt = (q.timestamp - p.timestamp).abs();
            if dt <= tol && best.map_or(true, |(_, b)| dt < b) {
                best = Some((j, dt));
            }
        }
        if let Some((j, _)) = best {
            used[j] = true;
            pairs.push((i, j));
        }
    }
    pairs
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn pose_at(t: f64) -> Pose {
        Pose::new(t, Vector3::new(t, 0.0, 0.0), UnitQuaternion::identity())
    }

    #[test]
    fn parse_skips_comments_and_bad_rows() {
        let text = "# header\n1.0 0 0 0 0 0 0 1\nnot a row\n2.0 1 0 0 0 0 0 1\n3.0 1 2\n";
        let t = Trajectory::parse_tum(text, "gt.txt").unwrap();
        assert_eq!(t.len(), 2);
        assert_relative_eq!(t.poses()[1].translation.x, 1.0);
    }

    #[test]
    fn parse_sorts_by_timestamp() {
        let text = "2.0 2 0 0 0 0 0 1\n1.0 1 0 0 0 0 0 1\n";
        let t = Trajectory::parse_tum(text, "gt.txt").unwrap();
        assert_relative_eq!(t.poses()[0].timestamp, 1.0);
        assert_relative_eq!(t.poses()[1].timestamp, 2.0);
    }

    #[test]
    fn round_trip_through_text() {
        let orig = Trajectory::new(vec![
            Pose::new(
                1.25,
                Vector3::new(0.5, -1.5, 2.0),
                UnitQuaternion::from_axis_angle(&Vector3::y_axis(), 0.7),
            ),
            pose_at(2.5),
        ]);
        let parsed = Trajectory::parse_tum(&orig.to_tum_string(), "mem").unwrap();
        assert_eq!(parsed.len(), 2);
        for (a, b) in orig.poses().iter().zip(parsed.poses()) {
            assert_relative_eq!(a.timestamp, b.timestamp, epsilon = 1e-6);
            assert_relative_eq!((a.translation - b.translation).norm(), 0.0, epsilon = 1e-8);
            assert!(a.rotation.angle_to(&b.rotation) < 1e-8);
        }
    }

    #[test]
    fn unnormalized_quaternions_are_normalized() {
        let t = Trajectory::parse_tum("1.0 0 0 0 0 0 0 2.0\n", "mem").unwrap();
        assert_relative_eq!(t.poses()[0].rotation.quaternion().norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn nearest_within_respects_tolerance() {
        let t = Trajectory::new(vec![pose_at(1.0), pose_at(2.0)]);
        assert_relative_eq!(t.nearest_within(1.1, 0.2).unwrap().timestamp, 1.0);
        assert_relative_eq!(t.nearest_within(1.6, 0.5).unwrap().timestamp, 2.0);
        assert!(t.nearest_within(5.0, 0.5).is_none());
    }

    #[test]
    fn association_is_greedy_and_exclusive() {
        let a = Trajectory::new(vec![pose_at(1.0), pose_at(2.0), pose_at(3.0)]);
        let b = Trajectory::new(vec![pose_at(1.01), pose_at(2.9), pose_at(10.0)]);
        let pairs = associate_poses(&a, &b, 0.15);
        assert_eq!(pairs, vec![(0, 0), (2, 1)]);
    }

    #[test]
    fn each_candidate_is_claimed_once() {
        let a = Trajectory::new(vec![pose_at(1.0), pose_at(1.05)]);
        let b = Trajectory::new(vec![pose_at(1.02)]);
        let pairs = associate_poses(&a, &b, 0.1);
        assert_eq!(pairs, vec![(0, 0)]);
    }
}
