//! Spray plans: class templates sized to the measured plate and tilted to
//! its fitted plane.
//!
//! Plans are built in the ideal workpiece frame, where the plate lies in the
//! plane through the origin with the reference normal, length runs along `up`
//! and width along `normal x up`. The gun sits `standoff` in front of that
//! plane and fires along `-normal`. A pose orientation is the rotation whose
//! columns are `(normal, up, normal x up)` at that pose.

mod job;
mod plan;
mod template;

pub use job::{write_gcode, JobFile, JobPose, RigidTransform};
pub use plan::{apply_slope_correction, instantiate, stroke_count, Pose, SprayPlan};
pub use template::{select_template, PlannerConfig, SprayTemplate, StrokeDirection};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("no spray template for class {0:?}")]
    UnknownClass(String),
    #[error("invalid template: {0}")]
    InvalidTemplate(String),
    #[error("dimensions must be positive, got {length} x {width}")]
    InvalidDimensions { length: f64, width: f64 },
    #[error("plane fit residual {rms:.4} m exceeds {limit:.4} m; plan withheld")]
    ImplausibleFit { rms: f64, limit: f64 },
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
}
