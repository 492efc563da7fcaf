use super::{Mat3, Vec3};
use crate::{Error, Hand, Result};

/// Pinhole camera with zero skew and a world-from-camera pose.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraModel {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl CameraModel {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, rotation: Mat3, translation: Vec3) -> Result<Self> {
        let cam = Self { fx, fy, cx, cy, rotation, translation };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::Schema(format!("focal lengths must be positive ({}, {})", self.fx, self.fy)));
        }
        let ortho = (self.rotation.transpose() * self.rotation - Mat3::identity()).abs().max();
        if !(ortho <= 1e-9) || self.rotation.determinant() <= 0.0 {
            return Err(Error::Schema(format!(
                "rotation is not a proper orthonormal matrix (|RtR - I| = {ortho:.3e})"
            )));
        }
        if !self.translation.iter().all(|v| v.is_finite()) {
            return Err(Error::Schema("non-finite camera translation".into()));
        }
        Ok(())
    }

    pub fn intrinsics(&self) -> Mat3 {
        Mat3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    pub fn intrinsics_inv(&self) -> Mat3 {
        Mat3::new(1.0 / self.fx, 0.0, -self.cx / self.fx, 0.0, 1.0 / self.fy, -self.cy / self.fy, 0.0, 0.0, 1.0)
    }

    /// World point seen at `pixel` with z-depth `depth` (meters).
    pub fn unproject(&self, pixel: [f64; 2], depth: f64) -> Result<Vec3> {
        if !(depth > 0.0 && depth.is_finite()) {
            return Err(Error::Structural(format!("invalid depth {depth}")));
        }
        let p_cam = Vec3::new(depth * (pixel[0] - self.cx) / self.fx, depth * (pixel[1] - self.cy) / self.fy, depth);
        Ok(self.rotation * p_cam + self.translation)
    }

    pub fn to_camera(&self, p_world: &Vec3) -> Vec3 {
        self.rotation.transpose() * (p_world - self.translation)
    }

    /// Pixel of a world point, `None` behind the camera.
    pub fn project(&self, p_world: &Vec3) -> Option<[f64; 2]> {
        let p = self.to_camera(p_world);
        (p.z > 0.0).then(|| [self.fx * p.x / p.z + self.cx, self.fy * p.y / p.z + self.cy])
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HandObservation {
    pub hand: Hand,
    pub centroid: Vec3,
    pub visible: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cam() -> CameraModel {
        let r = nalgebra::Rotation3::from_euler_angles(0.1, -0.2, 0.05).into_inner();
        CameraModel::new(500.0, 480.0, 320.0, 240.0, r, Vec3::new(0.3, -0.1, 1.2)).unwrap()
    }

    #[test]
    fn principal_point_identity_pose() {
        let c = CameraModel::new(500.0, 500.0, 320.0, 240.0, Mat3::identity(), Vec3::zeros()).unwrap();
        let p = c.unproject([320.0, 240.0], 2.0).unwrap();
        assert_eq!(p, Vec3::new(0.0, 0.0, 2.0));
    }

    #[test]
    fn project_inverts_unproject() {
        let c = cam();
        for (u, v, d) in [(0.0, 0.0, 0.5), (639.0, 479.0, 3.0), (100.5, 333.25, 1.7)] {
            let px = c.project(&c.unproject([u, v], d).unwrap()).unwrap();
            assert!((px[0] - u).abs() < 1e-9 && (px[1] - v).abs() < 1e-9);
        }
    }

    #[test]
    fn invalid_depth_rejected() {
        assert!(cam().unproject([1.0, 1.0], 0.0).is_err());
        assert!(cam().unproject([1.0, 1.0], f64::NAN).is_err());
    }

    #[test]
    fn rejects_bad_rotation() {
        let mut r = Mat3::identity();
        r[(0, 1)] = 0.1;
        assert!(CameraModel::new(1.0, 1.0, 0.0, 0.0, r, Vec3::zeros()).is_err());
        assert!(CameraModel::new(1.0, 1.0, 0.0, 0.0, -Mat3::identity(), Vec3::zeros()).is_err());
        assert!(CameraModel::new(0.0, 1.0, 0.0, 0.0, Mat3::identity(), Vec3::zeros()).is_err());
    }
}
