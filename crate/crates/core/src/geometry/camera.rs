use nalgebra::{Matrix3, Matrix3x4, Point3, Unit, Vector2, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use super::distortion::Distortion;
use super::GeometryError;

/// Sub-pixel image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pixel {
    pub u: f64,
    pub v: f64,
}

impl Pixel {
    pub fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn distance(&self, other: &Pixel) -> f64 {
        (self.u - other.u).hypot(self.v - other.v)
    }
}

/// Half-line `origin + t * direction`, `t >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Point3<f64>,
    pub direction: Unit<Vector3<f64>>,
}

impl Ray {
    pub fn new(origin: Point3<f64>, direction: Vector3<f64>) -> Result<Self, GeometryError> {
        let n = direction.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(GeometryError::InvalidDirection);
        }
        Ok(Self {
            origin,
            direction: Unit::new_unchecked(direction / n),
        })
    }

    pub fn at(&self, t: f64) -> Point3<f64> {
        self.origin + self.direction.into_inner() * t
    }
}

/// Pinhole camera described by a 3x4 projection matrix plus optional lens
/// distortion applied to the projected pixel.
///
/// The matrix is normalized at construction so that points in front of the
/// camera have a positive homogeneous `w`.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    projection: Matrix3x4<f64>,
    width: u32,
    height: u32,
    distortion: Distortion,
    left_inv: Matrix3<f64>,
    center: Point3<f64>,
    intrinsics: Matrix3<f64>,
    intrinsics_inv: Matrix3<f64>,
}

impl CameraModel {
    pub fn new(
        projection: Matrix3x4<f64>,
        width: u32,
        height: u32,
        distortion: Distortion,
    ) -> Result<Self, GeometryError> {
        if projection.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::DegenerateCamera);
        }
        let mut projection = projection;
        let left = projection.fixed_view::<3, 3>(0, 0).into_owned();
        let det = left.determinant();
        let scale = left.norm();
        if !(scale > 0.0) || det.abs() <= 1e-12 * scale.powi(3) {
            return Err(GeometryError::DegenerateCamera);
        }
        if det < 0.0 {
            projection = -projection;
        }
        let left = projection.fixed_view::<3, 3>(0, 0).into_owned();
        let left_inv = left.try_inverse().ok_or(GeometryError::DegenerateCamera)?;
        // Camera center solves H * [C; 1] = 0.
        let center = Point3::from(-(left_inv * projection.column(3)));
        let intrinsics = intrinsics_of(&left).ok_or(GeometryError::DegenerateCamera)?;
        let intrinsics_inv = intrinsics.try_inverse().ok_or(GeometryError::DegenerateCamera)?;
        Ok(Self {
            projection,
            width,
            height,
            distortion,
            left_inv,
            center,
            intrinsics,
            intrinsics_inv,
        })
    }

    /// Builds `H = K [R | -R C]` from intrinsics, a world-to-camera rotation
    /// and the camera center.
    pub fn from_parts(
        intrinsics: Matrix3<f64>,
        rotation: Matrix3<f64>,
        center: Point3<f64>,
        width: u32,
        height: u32,
        distortion: Distortion,
    ) -> Result<Self, GeometryError> {
        let t = -(rotation * center.coords);
        let mut rt = Matrix3x4::zeros();
        rt.fixed_view_mut::<3, 3>(0, 0).copy_from(&rotation);
        rt.set_column(3, &t);
        Self::new(intrinsics * rt, width, height, distortion)
    }

    pub fn projection(&self) -> &Matrix3x4<f64> {
        &self.projection
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn distortion(&self) -> &Distortion {
        &self.distortion
    }

    pub fn center(&self) -> Point3<f64> {
        self.center
    }

    /// Upper-triangular intrinsics recovered from the left 3x3 block.
    pub fn intrinsics(&self) -> &Matrix3<f64> {
        &self.intrinsics
    }

    /// `P_x = H * P`, dehomogenized, then distorted.
    pub fn project(&self, point: &Point3<f64>) -> Result<Pixel, GeometryError> {
        let ideal = self.project_ideal(point)?;
        Ok(self.distort(ideal))
    }

    /// Projection without the lens distortion step.
    pub fn project_ideal(&self, point: &Point3<f64>) -> Result<Pixel, GeometryError> {
        let h = self.projection * Vector4::new(point.x, point.y, point.z, 1.0);
        if h.z.abs() < 1e-12 {
            return Err(GeometryError::DegenerateProjection { w: h.z });
        }
        Ok(Pixel::new(h.x / h.z, h.y / h.z))
    }

    pub fn distort(&self, pixel: Pixel) -> Pixel {
        if self.distortion.is_zero() {
            return pixel;
        }
        let n = self.to_normalized(pixel);
        self.normalized_to_pixel(self.distortion.distort(n))
    }

    /// Inverts [`Self::distort`] to a fixed-point tolerance of 1e-8 px.
    pub fn undistort(&self, pixel: Pixel) -> Result<Pixel, GeometryError> {
        if self.distortion.is_zero() {
            return Ok(pixel);
        }
        let focal = self.intrinsics[(0, 0)].abs().max(self.intrinsics[(1, 1)].abs());
        let tol = 1e-8 / focal;
        let n = self.distortion.undistort(self.to_normalized(pixel), tol)?;
        Ok(self.normalized_to_pixel(n))
    }

    /// Ray from the camera center through an (undistorted) pixel.
    pub fn backproject(&self, pixel: Pixel) -> Ray {
        let dir = self.left_inv * Vector3::new(pixel.u, pixel.v, 1.0);
        Ray {
            origin: self.center,
            direction: Unit::new_normalize(dir),
        }
    }

    fn to_normalized(&self, pixel: Pixel) -> Vector2<f64> {
        let n = self.intrinsics_inv * Vector3::new(pixel.u, pixel.v, 1.0);
        Vector2::new(n.x / n.z, n.y / n.z)
    }

    fn normalized_to_pixel(&self, n: Vector2<f64>) -> Pixel {
        let p = self.intrinsics * Vector3::new(n.x, n.y, 1.0);
        Pixel::new(p.x / p.z, p.y / p.z)
    }
}

/// Upper-triangular `K` with `K K^T = M M^T` and `K[2][2] = 1`.
///
/// Flipping rows and columns turns the upper-triangular factor into a
/// lower-triangular Cholesky factor.
fn intrinsics_of(left: &Matrix3<f64>) -> Option<Matrix3<f64>> {
    let flip = Matrix3::new(0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0);
    let a = flip * left * left.transpose() * flip;
    let l = a.cholesky()?.l();
    let k = flip * l * flip;
    let s = k[(2, 2)];
    (s != 0.0).then(|| k / s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn normalized_camera() -> CameraModel {
        CameraModel::new(Matrix3x4::identity(), 640, 480, Distortion::default()).unwrap()
    }

    #[test]
    fn normalized_camera_perspective_division() {
        let cam = normalized_camera();
        let p = cam.project(&Point3::new(0.2, 0.4, 2.0)).unwrap();
        assert!((p.u - 0.1).abs() < 1e-15 && (p.v - 0.2).abs() < 1e-15);
        let p = cam.project(&Point3::new(0.0, 0.0, 1.0)).unwrap();
        assert_eq!((p.u, p.v), (0.0, 0.0));
    }

    #[test]
    fn principal_ray() {
        let ray = normalized_camera().backproject(Pixel::new(0.0, 0.0));
        assert!((ray.origin - Point3::origin()).norm() < 1e-15);
        assert!((ray.direction.into_inner() - Vector3::z()).norm() < 1e-15);
    }

    #[test]
    fn principal_plane_is_degenerate() {
        let err = normalized_camera().project(&Point3::new(1.0, 1.0, 0.0)).unwrap_err();
        assert!(matches!(err, GeometryError::DegenerateProjection { .. }));
    }

    #[test]
    fn rank_deficient_matrix_rejected() {
        let mut h = Matrix3x4::identity();
        h[(2, 2)] = 0.0;
        assert_eq!(
            CameraModel::new(h, 10, 10, Distortion::default()).unwrap_err(),
            GeometryError::DegenerateCamera
        );
    }

    #[test]
    fn negated_matrix_is_normalized() {
        let cam = CameraModel::new(-Matrix3x4::identity(), 10, 10, Distortion::default()).unwrap();
        let ray = cam.backproject(Pixel::new(0.3, -0.1));
        assert!(ray.direction.z > 0.0);
    }

    #[test]
    fn intrinsics_recovered_from_composed_matrix() {
        let k = Matrix3::new(800.0, 0.5, 320.0, 0.0, 780.0, 240.0, 0.0, 0.0, 1.0);
        let r = nalgebra::Rotation3::from_euler_angles(0.1, -0.3, 0.7).into_inner();
        let cam =
            CameraModel::from_parts(k, r, Point3::new(0.3, -1.0, 2.0), 640, 480, Distortion::default())
                .unwrap();
        assert!((cam.intrinsics() - k).norm() < 1e-9);
        assert!((cam.center() - Point3::new(0.3, -1.0, 2.0)).norm() < 1e-12);
    }
}
