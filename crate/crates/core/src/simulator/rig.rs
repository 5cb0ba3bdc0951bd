use nalgebra::{Matrix3, Point3, Vector3};

use super::{GroundTruth, SimError};
use crate::geometry::{Calibration, CameraModel, Distortion, LaserPlane};
use crate::pose::VerticalReference;
use crate::reconstruction::ConveyorModel;

pub const SENSOR_WIDTH: u32 = 1024;
pub const SENSOR_HEIGHT: u32 = 768;
pub const HORIZONTAL_FOV_DEG: f64 = 50.0;
pub const ROI_ROWS: usize = 80;

/// Camera, laser, conveyor and sensor window of a scanning cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Rig {
    pub camera: CameraModel,
    pub laser: LaserPlane,
    pub conveyor: ConveyorModel,
    pub reference: VerticalReference,
    /// Sensor pixel `[u, v]` of the window's top-left corner.
    pub roi_origin: [usize; 2],
    /// Window `[width, height]` in pixels.
    pub roi_size: [usize; 2],
    /// Conveyor travel before the plate reaches the laser and after it leaves.
    pub lead: f64,
    /// Spacing of laser rays where they meet the plate, in meters.
    pub arc_step: f64,
    /// Line profile width, in pixels.
    pub line_sigma_px: f64,
    pub line_peak: f64,
}

impl Default for Rig {
    /// Camera 1 m in front of the conveyor plane looking along `-x`, with
    /// image rows along `-z` and columns along `+y`. The laser sits 0.5 m
    /// upstream and its sheet meets the conveyor plane along `z = 0`.
    fn default() -> Self {
        let f = SENSOR_WIDTH as f64 / 2.0 / (HORIZONTAL_FOV_DEG.to_radians() / 2.0).tan();
        let (cx, cy) = ((SENSOR_WIDTH as f64 - 1.0) / 2.0, (SENSOR_HEIGHT as f64 - 1.0) / 2.0);
        let k = Matrix3::new(f, 0.0, cx, 0.0, f, cy, 0.0, 0.0, 1.0);
        let r = Matrix3::new(0.0, 1.0, 0.0, 0.0, 0.0, -1.0, -1.0, 0.0, 0.0);
        let camera = CameraModel::from_parts(k, r, Point3::new(1.0, 0.0, 0.0), SENSOR_WIDTH, SENSOR_HEIGHT, Distortion::default())
            .expect("default camera is valid");
        let laser = LaserPlane::new(Point3::new(1.0, 0.0, -0.5), Vector3::new(0.5, 0.0, 1.0)).expect("default laser is valid");
        let conveyor = ConveyorModel::new(1.0, 30.0, Vector3::z()).expect("default conveyor is valid");
        Self {
            camera,
            laser,
            conveyor,
            reference: VerticalReference::default(),
            roi_origin: [0, SENSOR_HEIGHT as usize / 2 - ROI_ROWS / 2],
            roi_size: [SENSOR_WIDTH as usize, ROI_ROWS],
            lead: 0.02,
            arc_step: 0.0002,
            line_sigma_px: 1.0,
            line_peak: 255.0,
        }
    }
}

/// A plate positioned for a scan, with the number of frames to capture.
#[derive(Debug, Clone, PartialEq)]
pub struct Staged {
    pub truth: GroundTruth,
    pub frames: u64,
}

impl Rig {
    pub fn calibration(&self) -> Calibration {
        Calibration {
            camera: self.camera.clone(),
            laser: self.laser,
        }
    }

    /// Sensor window corners `[[u0, v0], [u1, v1]]` in pixel coordinates.
    pub fn window(&self) -> [[f64; 2]; 2] {
        let [u0, v0] = self.roi_origin;
        let [w, h] = self.roi_size;
        [[u0 as f64, v0 as f64], [(u0 + w - 1) as f64, (v0 + h - 1) as f64]]
    }

    /// Places the plate so its leading edge meets the laser sheet after
    /// `lead` of travel, and counts the frames until it has fully passed.
    pub fn stage(&self, truth: &GroundTruth) -> Result<Staged, SimError> {
        let m = self.conveyor.motion_axis().into_inner();
        let n = self.laser.normal().into_inner();
        let rate = n.dot(&m);
        if rate.abs() < 1e-9 {
            return Err(SimError::NeverVisible);
        }
        let centered = truth.clone().with_centroid(Point3::origin());
        let crossings = centered.bounding_corners().map(|p| -self.laser.signed_distance(&p) / rate);
        let t0 = crossings.iter().cloned().fold(f64::INFINITY, f64::min);
        let t1 = crossings.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let start = t0 - self.lead;
        let frames = ((t1 - t0 + 2.0 * self.lead) / self.conveyor.step_per_frame()).ceil() as u64 + 1;
        Ok(Staged {
            truth: centered.with_centroid(Point3::from(m * start)),
            frames,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::ProfileClass;
    use crate::pose::Tilt;
    use crate::simulator::{generate_surface, SurfaceSpec};

    #[test]
    fn default_rig_geometry() {
        let rig = Rig::default();
        let c = rig.camera.project(&Point3::new(0.0, 0.0, 0.0)).unwrap();
        assert!((c.u - 511.5).abs() < 1e-9 && (c.v - 383.5).abs() < 1e-9);
        let right = rig.camera.project(&Point3::new(0.0, 0.1, 0.0)).unwrap();
        assert!(right.u > c.u);
        let down = rig.camera.project(&Point3::new(0.0, 0.0, -0.1)).unwrap();
        assert!(down.v > c.v);
        assert!(rig.laser.signed_distance(&Point3::new(0.0, 0.3, 0.0)).abs() < 1e-12);
        assert!((rig.conveyor.step_per_frame() - 1.0 / 1800.0).abs() < 1e-15);
        let half = rig.camera.project(&Point3::new(0.0, 0.4, 0.0)).unwrap();
        assert!(half.u < SENSOR_WIDTH as f64 - 1.0);
    }

    #[test]
    fn staging_sweeps_whole_plate() {
        let rig = Rig::default();
        let spec = SurfaceSpec {
            tilt: Tilt::from_degrees(5.0, 0.0),
            ..SurfaceSpec::new(ProfileClass::HorizontalWavy, 0.8, 0.4)
        };
        let staged = rig.stage(&generate_surface(&spec, &rig.reference).unwrap()).unwrap();
        let first = staged.truth.bounding_corners();
        let last_offset = rig.conveyor.offset(staged.frames - 1);
        for p in first {
            assert!(rig.laser.signed_distance(&p) < 0.0);
            assert!(rig.laser.signed_distance(&(p + last_offset)) > 0.0);
        }
    }
}
