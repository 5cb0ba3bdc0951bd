//! Height-matrix model of a scanned workpiece.
//!
//! Cell `(i, j)` stores the depth `x` of the surface point
//!
//! ```text
//! (x, y, z) = (depth[i][j], y_min + S_c * i, z_min - S_c * j)
//! ```
//!
//! Points measured in frame `f` are first moved back along the conveyor by
//! `f * step_per_frame`, so the matrix lives in the workpiece frame of the
//! first capture.

mod export;
mod matrix;
mod scan;

pub use export::{read_ply, write_csv, write_ply};
pub use matrix::{AccumulateStats, CellState, FillAxis, HeightMatrix};
pub use scan::{ScanBuilder, ScanConfig};

use nalgebra::{Point3, Unit, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{intersect_ray_plane, CameraModel, LaserPlane, Pixel};

#[derive(Debug, Error)]
pub enum ReconstructionError {
    #[error("conveyor {field} must be positive and finite, got {value}")]
    InvalidConveyor { field: &'static str, value: f64 },
    #[error("conveyor motion axis must be a unit vector")]
    InvalidAxis,
    #[error("cell size must be positive, got {0}")]
    InvalidCellSize(f64),
    #[error("sensor window does not see the laser plane")]
    EmptyExtent,
    #[error("snapshot: {0}")]
    Snapshot(String),
    #[error("point cloud: {0}")]
    PointCloud(String),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConveyorModel {
    speed_m_per_min: f64,
    frame_rate_hz: f64,
    motion_axis: Unit<Vector3<f64>>,
}

impl ConveyorModel {
    pub fn new(speed_m_per_min: f64, frame_rate_hz: f64, motion_axis: Vector3<f64>) -> Result<Self, ReconstructionError> {
        if !(speed_m_per_min.is_finite() && speed_m_per_min > 0.0) {
            return Err(ReconstructionError::InvalidConveyor {
                field: "speed",
                value: speed_m_per_min,
            });
        }
        if !(frame_rate_hz.is_finite() && frame_rate_hz > 0.0) {
            return Err(ReconstructionError::InvalidConveyor {
                field: "frame_rate",
                value: frame_rate_hz,
            });
        }
        if (motion_axis.norm() - 1.0).abs() > 1e-9 {
            return Err(ReconstructionError::InvalidAxis);
        }
        Ok(Self {
            speed_m_per_min,
            frame_rate_hz,
            motion_axis: Unit::new_normalize(motion_axis),
        })
    }

    pub fn speed_m_per_min(&self) -> f64 {
        self.speed_m_per_min
    }

    pub fn frame_rate_hz(&self) -> f64 {
        self.frame_rate_hz
    }

    pub fn motion_axis(&self) -> Unit<Vector3<f64>> {
        self.motion_axis
    }

    /// Meters travelled between consecutive frames.
    pub fn step_per_frame(&self) -> f64 {
        self.speed_m_per_min / (60.0 * self.frame_rate_hz)
    }

    /// Displacement of the workpiece at `frame_index`.
    pub fn offset(&self, frame_index: u64) -> Vector3<f64> {
        self.motion_axis.into_inner() * (frame_index as f64 * self.step_per_frame())
    }
}

/// Axis-aligned `(y, z)` bounds, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanExtent {
    pub y: [f64; 2],
    pub z: [f64; 2],
}

impl ScanExtent {
    /// Region of the laser plane seen through a sensor window over a scan
    /// of `frames` frames, expressed in the workpiece frame.
    pub fn from_rig(
        camera: &CameraModel,
        laser: &LaserPlane,
        window: [[f64; 2]; 2],
        conveyor: &ConveyorModel,
        frames: u64,
    ) -> Result<Self, ReconstructionError> {
        let [[u0, v0], [u1, v1]] = window;
        let mut ext = Self {
            y: [f64::INFINITY, f64::NEG_INFINITY],
            z: [f64::INFINITY, f64::NEG_INFINITY],
        };
        let last = conveyor.offset(frames.saturating_sub(1));
        for (u, v) in [(u0, v0), (u1, v0), (u0, v1), (u1, v1)] {
            let pixel = camera.undistort(Pixel::new(u, v)).unwrap_or(Pixel::new(u, v));
            let hit = intersect_ray_plane(&camera.backproject(pixel), laser)
                .map_err(|_| ReconstructionError::EmptyExtent)?;
            for p in [hit.point, hit.point - last] {
                ext.include(&p);
            }
        }
        Ok(ext)
    }

    fn include(&mut self, p: &Point3<f64>) {
        self.y = [self.y[0].min(p.y), self.y[1].max(p.y)];
        self.z = [self.z[0].min(p.z), self.z[1].max(p.z)];
    }

    pub fn grow(mut self, margin: f64) -> Self {
        self.y = [self.y[0] - margin, self.y[1] + margin];
        self.z = [self.z[0] - margin, self.z[1] + margin];
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_matches_conveyor_speed() {
        let c = ConveyorModel::new(1.0, 30.0, Vector3::z()).unwrap();
        assert!((c.step_per_frame() - 1.0 / 1800.0).abs() < 1e-15);
        assert!((c.offset(1800).z - 1.0).abs() < 1e-12);
    }

    #[test]
    fn conveyor_rejects_bad_values() {
        assert!(ConveyorModel::new(0.0, 30.0, Vector3::z()).is_err());
        assert!(ConveyorModel::new(1.0, -1.0, Vector3::z()).is_err());
        assert!(ConveyorModel::new(1.0, 30.0, Vector3::new(0.0, 0.0, 2.0)).is_err());
    }
}
