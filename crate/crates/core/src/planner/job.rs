//! Vendor-neutral job file and a plain-text G-code style dump.

use std::io::Write;
use std::path::Path;

use nalgebra::{Isometry3, UnitQuaternion};
use serde::{Deserialize, Serialize};

use super::{PlanError, SprayPlan, SprayTemplate};
use crate::classifier::ProfileClass;
use crate::pose::Tilt;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JobPose {
    pub p: [f64; 3],
    /// Unit quaternion `[w, x, y, z]`.
    pub q: [f64; 4],
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    /// Unit quaternion `[w, x, y, z]`.
    pub rotation: [f64; 4],
    pub translation: [f64; 3],
}

impl From<&Isometry3<f64>> for RigidTransform {
    fn from(iso: &Isometry3<f64>) -> Self {
        Self {
            rotation: quaternion_wxyz(&iso.rotation),
            translation: iso.translation.vector.into(),
        }
    }
}

fn quaternion_wxyz(q: &UnitQuaternion<f64>) -> [f64; 4] {
    [q.w, q.i, q.j, q.k]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobFile {
    pub schema: u32,
    pub model_id: Option<String>,
    pub class: ProfileClass,
    pub tilt_deg: [f64; 2],
    pub dimensions: [f64; 2],
    pub strokes: usize,
    pub total_path_length: f64,
    pub template: SprayTemplate,
    pub workpiece_frame: RigidTransform,
    pub poses: Vec<JobPose>,
}

impl JobFile {
    pub fn new(plan: &SprayPlan, model_id: Option<&str>, tilt: &Tilt) -> Self {
        Self {
            schema: 1,
            model_id: model_id.map(str::to_string),
            class: plan.template.class.clone(),
            tilt_deg: tilt.degrees(),
            dimensions: plan.dimensions,
            strokes: plan.strokes,
            total_path_length: plan.total_path_length,
            template: plan.template.clone(),
            workpiece_frame: RigidTransform::from(&plan.workpiece_frame),
            poses: plan
                .poses
                .iter()
                .map(|p| JobPose {
                    p: p.position.coords.into(),
                    q: quaternion_wxyz(&p.orientation),
                    v: p.speed,
                })
                .collect(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, PlanError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), PlanError> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// One `G1` line per pose: position in mm, orientation quaternion, feed in
/// mm/min.
pub fn write_gcode<W: Write>(mut w: W, job: &JobFile) -> Result<(), PlanError> {
    writeln!(w, "; class {}", job.class)?;
    writeln!(w, "; model {}", job.model_id.as_deref().unwrap_or("none"))?;
    writeln!(w, "; tilt_deg {:.3} {:.3}", job.tilt_deg[0], job.tilt_deg[1])?;
    writeln!(w, "; poses {} path_m {:.4}", job.poses.len(), job.total_path_length)?;
    writeln!(w, "G21")?;
    writeln!(w, "G90")?;
    for p in &job.poses {
        writeln!(
            w,
            "G1 X{:.3} Y{:.3} Z{:.3} QW{:.6} QX{:.6} QY{:.6} QZ{:.6} F{:.1}",
            p.p[0] * 1e3,
            p.p[1] * 1e3,
            p.p[2] * 1e3,
            p.q[0],
            p.q[1],
            p.q[2],
            p.q[3],
            p.v * 6e4,
        )?;
    }
    writeln!(w, "M2")?;
    Ok(())
}
