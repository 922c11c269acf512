use crate::error::{CoreError, Result};
use crate::metrics::trajectory::{associate_poses, Trajectory};
use nalgebra::{Isometry3, Matrix3, Rotation3, Translation3, Vector3};

/// Absolute trajectory error after a rigid alignment of the estimate onto
/// the reference.
#[derive(Debug, Clone)]
pub struct AteReport {
    pub rmse: f64,
    pub mean: f64,
    pub max: f64,
    pub pairs: usize,
    pub rotation: Rotation3<f64>,
    pub translation: Vector3<f64>,
}

/// Relative pose error statistics over fixed-step pose deltas.
#[derive(Debug, Clone)]
pub struct RpeReport {
    pub rmse: f64,
    pub mean: f64,
    pub max: f64,
    pub count: usize,
}

/// Least-squares rigid transform (R, t) minimizing sum |ref_i - (R est_i + t)|^2,
/// via SVD of the centered cross-covariance with a determinant correction
/// that keeps R a proper rotation.
pub fn rigid_align(
    reference: &[Vector3<f64>],
    estimate: &[Vector3<f64>],
) -> Result<(Rotation3<f64>, Vector3<f64>)> {
    if reference.len() != estimate.len() || reference.len() < 3 {
        return Err(CoreError::InsufficientOverlap {
            pairs: reference.len().min(estimate.len()),
        });
    }
    let n = reference.len() as f64;
    let c_ref: Vector3<f64> = reference.iter().sum::<Vector3<f64>>() / n;
    let c_est: Vector3<f64> = estimate.iter().sum::<Vector3<f64>>() / n;

    let mut h = Matrix3::zeros();
    for (r, e) in reference.iter().zip(estimate) {
        h += (e - c_est) * (r - c_ref).transpose();
    }
    let svd = h.svd(true, true);
    let u = svd.u.ok_or_else(|| CoreError::InvalidInput("svd failed".into()))?;
    let v_t = svd.v_t.ok_or_else(|| CoreError::InvalidInput("svd failed".into()))?;
    let d = (v_t.transpose() * u.transpose()).determinant();
    let correction = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, d.signum()));
    let r = v_t.transpose() * correction * u.transpose();
    let rot = Rotation3::from_matrix_unchecked(r);
    let t = c_ref - rot * c_est;
    Ok((rot, t))
}

/// Associates the two trajectories by timestamp, rigidly aligns the
/// estimate onto the reference, and reports translational residuals.
/// Fewer than 3 associated pairs is an error.
pub fn ate(reference: &Trajectory, estimate: &Trajectory, tol: f64) -> Result<AteReport> {
    let pairs = associate_poses(reference, estimate, tol);
    if pairs.len() < 3 {
        return Err(CoreError::InsufficientOverlap { pairs: pairs.len() });
    }
    let ref_pts: Vec<Vector3<f64>> = pairs
        .iter()
        .map(|&(i, _)| reference.poses()[i].translation)
        .collect();
    let est_pts: Vec<Vector3<f64>> = pairs
        .iter()
        .map(|&(_, j)| estimate.poses()[j].translation)
        .collect();
    let (rot, t) = rigid_align(&ref_pts, &est_pts)?;

    let mut sum_sq = 0.0;
    let mut sum = 0.0;
    let mut max = 0.0f64;
    for (r, e) in ref_pts.iter().zip(&est_pts) {
        let d = (r - (rot * e + t)).norm();
        sum_sq += d * d;
        sum += d;
        max = max.max(d);
    }
    let n = pairs.len() as f64;
    Ok(AteReport {
        rmse: (sum_sq / n).sqrt(),
        mean: sum / n,
        max,
        pairs: pairs.len(),
        rotation: rot,
        translation: t,
    })
}

fn isometry(p: &crate::types::Pose) -> Isometry3<f64> {
    Isometry3::from_parts(Translation3::from(p.translation), p.rotation)
}

/// Relative pose error over a step of `delta` associated frames:
/// E_i = (Q_i^-1 Q_{i+d})^-1 (P_i^-1 P_{i+d}), reported through the norm
/// of its translation.
pub fn rpe(reference: &Trajectory, estimate: &Trajectory, tol: f64, delta: usize) -> Result<RpeReport> {
    if delta == 0 {
        return Err(CoreError::InvalidInput("rpe step must be positive".into()));
    }
    let pairs = associate_poses(reference, estimate, tol);
    if pairs.len() < delta + 1 {
        return Err(CoreError::InsufficientOverlap { pairs: pairs.len() });
    }
    let mut sum_sq = 0.0;
    let mut sum = 0.0;
    let mut max = 0.0f64;
    let count = pairs.len() - delta;
    for i in 0..count {
        let (ri, ei) = pairs[i];
        let (rj, ej) = pairs[i + delta];
        let q = isometry(&reference.poses()[ri]).inverse() * isometry(&reference.poses()[rj]);
        let p = isometry(&estimate.poses()[ei]).inverse() * isometry(&estimate.poses()[ej]);
        let err = q.inverse() * p;
        let d = err.translation.vector.norm();
        sum_sq += d * d;
        sum += d;
        max = max.max(d);
    }
    Ok(RpeReport {
        rmse: (sum_sq / count as f64).sqrt(),
        mean: sum / count as f64,
        max,
        count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Pose;
    use approx::assert_relative_eq;
    use nalgebra::UnitQuaternion;

    fn traj(points: &[(f64, [f64; 3])]) -> Trajectory {
        Trajectory::new(
            points
                .iter()
                .map(|&(t, p)| Pose::new(t, Vector3::new(p[0], p[1], p[2]), UnitQuaternion::identity()))
                .collect(),
        )
    }

    #[test]
    fn identical_trajectories_have_zero_error() {
        let t = traj(&[(0.0, [0.0, 0.0, 0.0]), (1.0, [1.0, 0.0, 0.0]), (2.0, [2.0, 1.0, 0.0])]);
        let r = ate(&t, &t, 0.01).unwrap();
        assert!(r.rmse < 1e-15);
        assert_eq!(r.pairs, 3);
    }

    #[test]
    fn rigid_copy_aligns_to_zero() {
        let pts = [
            (0.0, [0.0, 0.0, 0.0]),
            (1.0, [1.0, 0.5, 0.0]),
            (2.0, [2.0, 0.0, 1.0]),
            (3.0, [0.5, 2.0, 0.3]),
        ];
        let rot = UnitQuaternion::from_axis_angle(&Vector3::z_axis(), 0.8).to_rotation_matrix();
        let shift = Vector3::new(5.0, -2.0, 3.0);
        let moved = Trajectory::new(
            pts.iter()
                .map(|&(t, p)| {
                    let v = rot * Vector3::new(p[0], p[1], p[2]) + shift;
                    Pose::new(t, v, UnitQuaternion::identity())
                })
                .collect(),
        );
        let r = ate(&traj(&pts), &moved, 0.01).unwrap();
        assert!(r.rmse < 1e-12, "rmse {}", r.rmse);
    }

    #[test]
    fn hand_computed_residual() {
        // Estimate equals reference except one pose shifted by 0.3 on x.
        // Alignment redistributes the error but the rmse is fixed by
        // geometry; verify against a direct evaluation of the aligned
        // residuals rather than a guessed constant.
        let reference = traj(&[(0.0, [0.0, 0.0, 0.0]), (1.0, [1.0, 0.0, 0.0]), (2.0, [0.0, 1.0, 0.0])]);
        let estimate = traj(&[(0.0, [0.3, 0.0, 0.0]), (1.0, [1.0, 0.0, 0.0]), (2.0, [0.0, 1.0, 0.0])]);
        let r = ate(&reference, &estimate, 0.01).unwrap();
        assert!(r.rmse > 0.05 && r.rmse < 0.3, "rmse {}", r.rmse);
        // The report's transform must reproduce its own rmse.
        let mut sum_sq = 0.0;
        for (gt, est) in reference.poses().iter().zip(estimate.poses()) {
            let d = (gt.translation - (r.rotation * est.translation + r.translation)).norm();
            sum_sq += d * d;
        }
        assert_relative_eq!((sum_sq / 3.0).sqrt(), r.rmse, epsilon = 1e-12);
    }

    #[test]
    fn too_few_pairs_is_an_error() {
        let a = traj(&[(0.0, [0.0; 3]), (1.0, [1.0, 0.0, 0.0])]);
        let err = ate(&a, &a, 0.01).unwrap_err();
        assert!(matches!(err, CoreError::InsufficientOverlap { pairs: 2 }));
    }

    #[test]
    fn disjoint_timestamps_are_insufficient() {
        let a = traj(&[(0.0, [0.0; 3]), (1.0, [0.0; 3]), (2.0, [0.0; 3])]);
        let b = traj(&[(10.0, [0.0; 3]), (11.0, [0.0; 3]), (12.0, [0.0; 3])]);
        assert!(matches!(
            ate(&a, &b, 0.02),
            Err(CoreError::InsufficientOverlap { pairs: 0 })
        ));
    }

    #[test]
    fn rpe_detects_one_bad_step() {
        let reference = traj(&[
            (0.0, [0.0, 0.0, 0.0]),
            (1.0, [1.0, 0.0, 0.0]),
            (2.0, [2.0, 0.0, 0.0]),
            (3.0, [3.0, 0.0, 0.0]),
        ]);
        // One step overshoots by 0.5; identity rotations make the relative
        // translation error exactly the overshoot difference.
        let estimate = traj(&[
            (0.0, [0.0, 0.0, 0.0]),
            (1.0, [1.0, 0.0, 0.0]),
            (2.0, [2.5, 0.0, 0.0]),
            (3.0, [3.0, 0.0, 0.0]),
        ]);
        let r = rpe(&reference, &estimate, 0.01, 1).unwrap();
        assert_eq!(r.count, 3);
        assert_relative_eq!(r.max, 0.5, epsilon = 1e-12);
        assert_relative_eq!(r.rmse, (0.5f64 * 0.5 * 2.0 / 3.0).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn rpe_is_zero_for_rigidly_moved_copy() {
        let pts = [
            (0.0, [0.0, 0.0, 0.0]),
            (1.0, [1.0, 0.2, 0.1]),
            (2.0, [1.5, 1.0, 0.4]),
        ];
        let rot = UnitQuaternion::from_axis_angle(&Vector3::x_axis(), 0.4);
        let moved = Trajectory::new(
            pts.iter()
                .map(|&(t, p)| {
                    Pose::new(
                        t,
                        rot * Vector3::new(p[0], p[1], p[2]) + Vector3::new(1.0, 2.0, 3.0),
                        rot,
                    )
                })
                .collect(),
        );
        // Both pose chains experience the same relative motions when the
        // estimate is a globally transformed copy with consistent
        // orientations.
        let reference = Trajectory::new(
            pts.iter()
                .map(|&(t, p)| {
                    Pose::new(t, Vector3::new(p[0], p[1], p[2]), UnitQuaternion::identity())
                })
                .collect(),
        );
        let r = rpe(&reference, &moved, 0.01, 1).unwrap();
        assert!(r.rmse < 1e-12, "rmse {}", r.rmse);
    }
}
