use super::{CameraModel, Mat3, Vec3};
use crate::{Error, Result};

pub fn skew(t: &Vec3) -> Mat3 {
    Mat3::new(0.0, -t.z, t.y, t.z, 0.0, -t.x, -t.y, t.x, 0.0)
}

/// Pose of camera `i` expressed in camera `j`: `p_j = R_rel * p_i + t_rel`.
pub fn relative_pose(cam_i: &CameraModel, cam_j: &CameraModel) -> (Mat3, Vec3) {
    let rj_t = cam_j.rotation.transpose();
    (rj_t * cam_i.rotation, rj_t * (cam_i.translation - cam_j.translation))
}

/// `F = K_j^-T [t_rel]x R_rel K_i^-1`, scaled to unit Frobenius norm, so that
/// `x_j^T F x_i = 0` for a static point seen at `x_i` in view i and `x_j` in view j.
///
/// Relative translations of at most `t_min` meters are rejected: without
/// parallax the epipolar constraint carries no information.
pub fn fundamental_from_poses(cam_i: &CameraModel, cam_j: &CameraModel, t_min: f64) -> Result<Mat3> {
    let (r_rel, t_rel) = relative_pose(cam_i, cam_j);
    let norm = t_rel.norm();
    if !(norm > t_min) {
        return Err(Error::DegenerateMotion { translation: norm });
    }
    let f = cam_j.intrinsics_inv().transpose() * skew(&t_rel) * r_rel * cam_i.intrinsics_inv();
    Ok(f / f.norm())
}

/// `sigma_3 / sigma_1` of `f`.
pub fn rank2_ratio(f: &Mat3) -> f64 {
    let sv = f.singular_values();
    let max = sv.max();
    if max == 0.0 {
        return 0.0;
    }
    sv.min() / max
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_cam(t: Vec3) -> CameraModel {
        CameraModel::new(1.0, 1.0, 0.0, 0.0, Mat3::identity(), t).unwrap()
    }

    #[test]
    fn pure_translation_is_skew() {
        // camera i sits 1 m to the right of camera j in j's frame
        let f = fundamental_from_poses(&identity_cam(Vec3::new(1.0, 0.0, 0.0)), &identity_cam(Vec3::zeros()), 1e-3)
            .unwrap();
        let expected = Mat3::new(0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0) / 2f64.sqrt();
        assert!((f - expected).abs().max() < 1e-12);
    }

    #[test]
    fn identical_poses_are_degenerate() {
        let c = identity_cam(Vec3::new(0.2, 0.1, 0.0));
        assert!(matches!(fundamental_from_poses(&c, &c, 1e-3), Err(Error::DegenerateMotion { .. })));
    }

    #[test]
    fn unit_frobenius() {
        let r = nalgebra::Rotation3::from_euler_angles(0.02, 0.1, -0.03).into_inner();
        let a = CameraModel::new(400.0, 410.0, 300.0, 200.0, Mat3::identity(), Vec3::zeros()).unwrap();
        let b = CameraModel::new(400.0, 410.0, 300.0, 200.0, r, Vec3::new(0.05, 0.01, 0.02)).unwrap();
        let f = fundamental_from_poses(&a, &b, 1e-3).unwrap();
        assert!((f.norm() - 1.0).abs() < 1e-12);
        assert!(rank2_ratio(&f) < 1e-9);
    }
}
