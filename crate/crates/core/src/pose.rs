//! Workpiece tilt relative to the ideal hanging pose.
//!
//! The ideal pose is described by a reference surface normal `r` (pointing
//! from the workpiece toward the camera) and the world `up` direction. A tilt
//! is a pitch, which leans the normal toward `up`, followed by a yaw about
//! `up`:
//!
//! ```text
//! n = cos(pitch) (cos(yaw) r + sin(yaw) s) + sin(pitch) up,   s = up x r
//! ```

use nalgebra::{Rotation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerticalReference {
    normal: Unit<Vector3<f64>>,
    up: Unit<Vector3<f64>>,
}

impl Default for VerticalReference {
    /// World frame convention: `+x` points at the camera, `+y` is up.
    fn default() -> Self {
        Self {
            normal: Vector3::x_axis(),
            up: Vector3::y_axis(),
        }
    }
}

impl VerticalReference {
    /// Returns `None` unless the two vectors are non-zero and orthogonal.
    pub fn new(normal: Vector3<f64>, up: Vector3<f64>) -> Option<Self> {
        let normal = Unit::try_new(normal, 1e-12)?;
        let up = Unit::try_new(up, 1e-12)?;
        (normal.dot(&up).abs() < 1e-9).then_some(Self { normal, up })
    }

    pub fn normal(&self) -> Unit<Vector3<f64>> {
        self.normal
    }

    pub fn up(&self) -> Unit<Vector3<f64>> {
        self.up
    }

    /// In-plane horizontal axis, `up x normal`.
    pub fn side(&self) -> Unit<Vector3<f64>> {
        Unit::new_normalize(self.up.cross(&self.normal))
    }
}

/// Pitch and yaw in radians.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Tilt {
    pub pitch: f64,
    pub yaw: f64,
}

impl Tilt {
    pub fn new(pitch: f64, yaw: f64) -> Self {
        Self { pitch, yaw }
    }

    pub fn from_degrees(pitch: f64, yaw: f64) -> Self {
        Self::new(pitch.to_radians(), yaw.to_radians())
    }

    pub fn degrees(&self) -> [f64; 2] {
        [self.pitch.to_degrees(), self.yaw.to_degrees()]
    }

    /// Reads the tilt off a surface normal; the normal is first flipped to
    /// face the reference direction.
    pub fn from_normal(normal: &Vector3<f64>, reference: &VerticalReference) -> Self {
        let mut n = normal.normalize();
        if n.dot(&reference.normal) < 0.0 {
            n = -n;
        }
        let pitch = n.dot(&reference.up).clamp(-1.0, 1.0).asin();
        let yaw = n.dot(&reference.side()).atan2(n.dot(&reference.normal));
        Self { pitch, yaw }
    }

    /// Rotation taking the ideal pose to the tilted one.
    pub fn rotation(&self, reference: &VerticalReference) -> Rotation3<f64> {
        let pitch_axis = Unit::new_normalize(reference.normal.cross(&reference.up));
        let pitch = Rotation3::from_axis_angle(&pitch_axis, self.pitch);
        let yaw = Rotation3::from_axis_angle(&reference.up, self.yaw);
        yaw * pitch
    }

    pub fn quaternion(&self, reference: &VerticalReference) -> UnitQuaternion<f64> {
        UnitQuaternion::from_rotation_matrix(&self.rotation(reference))
    }

    pub fn normal(&self, reference: &VerticalReference) -> Vector3<f64> {
        self.rotation(reference) * reference.normal.into_inner()
    }
}
