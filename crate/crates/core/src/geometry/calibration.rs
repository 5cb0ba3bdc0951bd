//! Calibration file: camera projection matrix plus laser plane.
//!
//! ```json
//! {"camera": {"H": [[...], [...], [...]], "width": 1024, "height": 768,
//!             "distortion": [k1, k2, p1, p2]},
//!  "laser": {"anchor": [x, y, z], "normal": [x, y, z]}}
//! ```

use std::path::Path;

use nalgebra::{Matrix3x4, Point3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{CameraModel, Distortion, GeometryError, LaserPlane};

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("reading calibration: {0}")]
    Io(#[from] std::io::Error),
    #[error("parsing calibration: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid calibration field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

fn invalid(field: &'static str, reason: impl Into<String>) -> CalibrationError {
    CalibrationError::Invalid {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CameraRecord {
    #[serde(rename = "H")]
    h: [[f64; 4]; 3],
    width: u32,
    height: u32,
    #[serde(default)]
    distortion: Option<[f64; 4]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct LaserRecord {
    anchor: [f64; 3],
    normal: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CalibrationRecord {
    camera: CameraRecord,
    laser: LaserRecord,
}

/// A validated camera + laser calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub camera: CameraModel,
    pub laser: LaserPlane,
}

impl Calibration {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, CalibrationError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn from_json(text: &str) -> Result<Self, CalibrationError> {
        let record: CalibrationRecord = serde_json::from_str(text)?;
        Self::from_record(record)
    }

    fn from_record(r: CalibrationRecord) -> Result<Self, CalibrationError> {
        let h = Matrix3x4::from_fn(|i, j| r.camera.h[i][j]);
        if h.iter().any(|v| !v.is_finite()) {
            return Err(invalid("camera.H", "non-finite entry"));
        }
        if r.camera.width == 0 {
            return Err(invalid("camera.width", "must be positive"));
        }
        if r.camera.height == 0 {
            return Err(invalid("camera.height", "must be positive"));
        }
        let distortion = Distortion::from_array(r.camera.distortion.unwrap_or([0.0; 4]));
        if !distortion.is_finite() {
            return Err(invalid("camera.distortion", "non-finite coefficient"));
        }
        let camera = CameraModel::new(h, r.camera.width, r.camera.height, distortion).map_err(|e| match e {
            GeometryError::DegenerateCamera => invalid("camera.H", "rank deficient or center at infinity"),
            other => invalid("camera.H", other.to_string()),
        })?;

        let anchor = Point3::from(r.laser.anchor);
        if anchor.iter().any(|v| !v.is_finite()) {
            return Err(invalid("laser.anchor", "non-finite coordinate"));
        }
        let normal = Vector3::from(r.laser.normal);
        let norm = normal.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-9 {
            return Err(invalid("laser.normal", format!("must be unit length, got norm {norm}")));
        }
        let laser = LaserPlane::new(anchor, normal).map_err(|e| invalid("laser.normal", e.to_string()))?;
        Ok(Self { camera, laser })
    }

    pub fn to_json(&self) -> String {
        let h = self.camera.projection();
        let record = CalibrationRecord {
            camera: CameraRecord {
                h: std::array::from_fn(|i| std::array::from_fn(|j| h[(i, j)])),
                width: self.camera.width(),
                height: self.camera.height(),
                distortion: Some(self.camera.distortion().to_array()),
            },
            laser: LaserRecord {
                anchor: self.laser.anchor().coords.into(),
                normal: self.laser.normal().into_inner().into(),
            },
        };
        serde_json::to_string_pretty(&record).expect("calibration serializes")
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CalibrationError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"{"camera": {"H": [[1,0,0,0],[0,1,0,0],[0,0,1,0]], "width": 64, "height": 48},
                          "laser": {"anchor": [0,0,2], "normal": [0,0,1]}}"#;

    #[test]
    fn loads_and_round_trips() {
        let cal = Calibration::from_json(GOOD).unwrap();
        assert_eq!(cal.camera.width(), 64);
        assert!(cal.camera.distortion().is_zero());
        let again = Calibration::from_json(&cal.to_json()).unwrap();
        assert_eq!(again, cal);
    }

    fn field_of(text: &str) -> &'static str {
        match Calibration::from_json(text).unwrap_err() {
            CalibrationError::Invalid { field, .. } => field,
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn rejections_name_the_field() {
        assert_eq!(field_of(&GOOD.replace("[0,0,1]}", "[0,0,2]}")), "laser.normal");
        assert_eq!(field_of(&GOOD.replace("[0,0,1,0]]", "[0,0,0,0]]")), "camera.H");
        assert_eq!(field_of(&GOOD.replace("\"width\": 64", "\"width\": 0")), "camera.width");
        assert_eq!(field_of(&GOOD.replace("\"height\": 48", "\"height\": 0")), "camera.height");
    }
}
