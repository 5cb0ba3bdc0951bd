//! Calibrated camera and laser-plane geometry.
//!
//! World units are meters. Pixel coordinates have their origin at the
//! top-left pixel center, `u` growing rightward and `v` downward.
//!
//! The pipeline recovers a 3D point from a laser pixel by intersecting the
//! camera ray through that pixel with the calibrated laser plane:
//!
//! ```text
//! ray:    P = P_r0 + w_r * t
//! plane:  w_n . P = d
//! t     = (d - w_n . P_r0) / (w_n . w_r)
//! ```

mod calibration;
mod camera;
mod distortion;
mod laser;

pub use calibration::{Calibration, CalibrationError};
pub use camera::{CameraModel, Pixel, Ray};
pub use distortion::Distortion;
pub use laser::{calibrate_laser_plane, intersect_ray_plane, Intersection, LaserPlane};

use thiserror::Error;

/// Failures of the geometric primitives.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("point lies on the camera principal plane (w = {w:e})")]
    DegenerateProjection { w: f64 },
    #[error("projection matrix is rank deficient or has its center at infinity")]
    DegenerateCamera,
    #[error("undistortion did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("calibration points are collinear")]
    CollinearPoints,
    #[error("need at least 3 points, got {got}")]
    TooFewPoints { got: usize },
    #[error("ray is parallel to the laser plane")]
    ParallelRay,
    #[error("intersection lies behind the ray origin (t = {t})")]
    BehindCamera { t: f64 },
    #[error("direction vector has zero or non-finite length")]
    InvalidDirection,
}
