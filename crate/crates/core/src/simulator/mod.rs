//! Synthetic scanner: plates with known geometry rendered as laser-line
//! frames through the same camera and laser models the pipeline inverts.

mod render;
mod rig;
mod suite;
mod surface;

pub use render::{render_frame, render_scan, render_scan_with, trace_frame, truth_at, LineSample};
pub use rig::{Rig, Staged, HORIZONTAL_FOV_DEG, ROI_ROWS, SENSOR_HEIGHT, SENSOR_WIDTH};
pub use suite::{
    scenario_suite, write_scenario, write_suite, GroundTruthRecord, Scenario, SuiteEntry, SuiteManifest, SuiteRequest,
    CALIBRATION_FILE, GROUND_TRUTH_FILE, SUITE_MANIFEST,
};
pub use surface::{generate_surface, GroundTruth, SurfaceSpec, DEFAULT_WAVE_AMPLITUDE, DEFAULT_WAVE_PERIOD};

use thiserror::Error;

use crate::frame::FrameError;
use crate::geometry::CalibrationError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid surface spec: {0}")]
    InvalidSpec(String),
    #[error("no surface model for class {0:?}")]
    UnknownClass(String),
    #[error("catalog has no {size} entry for class {class}")]
    UnknownSize { class: String, size: String },
    #[error("suite request has an empty class, size, tilt or seed list")]
    EmptySuite,
    #[error("the laser line never falls on the plate inside the sensor window")]
    NeverVisible,
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("JSON: {0}")]
    Json(#[from] serde_json::Error),
}
