//! Scenario suites and their on-disk layout.
//!
//! ```text
//! <root>/suite.json
//! <root>/<scenario id>/manifest.json, frame_%06d.pgm, ground_truth.json, calibration.json
//! ```

use std::path::Path;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use super::{generate_surface, render_scan_with, GroundTruth, Rig, SimError, SurfaceSpec, DEFAULT_WAVE_AMPLITUDE, DEFAULT_WAVE_PERIOD};
use crate::classifier::{ModelCatalog, ProfileClass, STANDARD_SIZES};
use crate::frame::{ConveyorRecord, ScanManifest};
use crate::pose::{Tilt, VerticalReference};

pub const SUITE_MANIFEST: &str = "suite.json";
pub const GROUND_TRUTH_FILE: &str = "ground_truth.json";
pub const CALIBRATION_FILE: &str = "calibration.json";

/// Cartesian product request; tilts are pitch angles in degrees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteRequest {
    pub classes: Vec<ProfileClass>,
    pub sizes: Vec<String>,
    pub tilts_deg: Vec<f64>,
    pub seeds: Vec<u64>,
    pub wave_amplitude: f64,
    pub wave_period: f64,
    pub pixel_noise_sigma: f64,
    pub depth_noise_sigma: f64,
}

impl Default for SuiteRequest {
    fn default() -> Self {
        Self {
            classes: ProfileClass::BUILTIN.to_vec(),
            sizes: STANDARD_SIZES.iter().map(|s| s.0.to_string()).collect(),
            tilts_deg: vec![0.0],
            seeds: vec![0],
            wave_amplitude: DEFAULT_WAVE_AMPLITUDE,
            wave_period: DEFAULT_WAVE_PERIOD,
            pixel_noise_sigma: 0.0,
            depth_noise_sigma: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub id: String,
    pub model_id: String,
    pub spec: SurfaceSpec,
    pub truth: GroundTruth,
}

fn tilt_tag(t: f64) -> String {
    format!("{t}").replace('-', "m").replace('.', "p")
}

/// One scenario per class, size, tilt and seed, in that nesting order.
pub fn scenario_suite(
    catalog: &ModelCatalog,
    request: &SuiteRequest,
    reference: &VerticalReference,
) -> Result<Vec<Scenario>, SimError> {
    if request.classes.is_empty() || request.sizes.is_empty() || request.tilts_deg.is_empty() || request.seeds.is_empty() {
        return Err(SimError::EmptySuite);
    }
    let mut out = Vec::new();
    for class in &request.classes {
        for size in &request.sizes {
            let entry = catalog.by_size(class, size).ok_or_else(|| SimError::UnknownSize {
                class: class.id().to_string(),
                size: size.clone(),
            })?;
            for &tilt in &request.tilts_deg {
                for &seed in &request.seeds {
                    let spec = SurfaceSpec {
                        wave_amplitude: if *class == ProfileClass::Smooth { 0.0 } else { request.wave_amplitude },
                        wave_period: request.wave_period,
                        tilt: Tilt::from_degrees(tilt, 0.0),
                        pixel_noise_sigma: request.pixel_noise_sigma,
                        depth_noise_sigma: request.depth_noise_sigma,
                        seed,
                        ..SurfaceSpec::new(class.clone(), entry.length, entry.width)
                    };
                    let truth = generate_surface(&spec, reference)?;
                    out.push(Scenario {
                        id: format!("{}_{size}_t{}_s{seed}", class.id(), tilt_tag(tilt)),
                        model_id: entry.model_id.clone(),
                        spec,
                        truth,
                    });
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruthRecord {
    pub schema: u32,
    pub scenario_id: String,
    pub model_id: String,
    pub class: ProfileClass,
    pub length: f64,
    pub width: f64,
    pub tilt_deg: [f64; 2],
    pub normal: [f64; 3],
    /// Plate centroid at the first frame.
    pub centroid: [f64; 3],
    pub frames: u64,
    pub spec: SurfaceSpec,
}

impl GroundTruthRecord {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, SimError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn truth(&self, reference: &VerticalReference) -> Result<GroundTruth, SimError> {
        Ok(generate_surface(&self.spec, reference)?.with_centroid(Point3::from(self.centroid)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteEntry {
    pub id: String,
    /// Directory relative to the suite root.
    pub dir: String,
    pub class: ProfileClass,
    pub model_id: String,
    pub tilt_deg: [f64; 2],
    pub seed: u64,
    pub frames: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteManifest {
    pub schema: u32,
    pub scenarios: Vec<SuiteEntry>,
}

impl SuiteManifest {
    pub fn load(root: impl AsRef<Path>) -> Result<Self, SimError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(root.as_ref().join(SUITE_MANIFEST))?)?)
    }

    pub fn save(&self, root: impl AsRef<Path>) -> Result<(), SimError> {
        std::fs::write(root.as_ref().join(SUITE_MANIFEST), serde_json::to_string_pretty(self)?)?;
        Ok(())
    }
}

/// Renders one scenario into `root/<id>`.
pub fn write_scenario(root: impl AsRef<Path>, scenario: &Scenario, rig: &Rig) -> Result<SuiteEntry, SimError> {
    let dir = root.as_ref().join(&scenario.id);
    std::fs::create_dir_all(&dir)?;
    let staged = rig.stage(&scenario.truth)?;
    let mut records = Vec::with_capacity(staged.frames as usize);
    render_scan_with(&staged, rig, |frame| {
        records.push(ScanManifest::write_frame(&dir, &frame)?);
        Ok(())
    })?;
    let manifest = ScanManifest {
        schema: 1,
        scan_id: scenario.id.clone(),
        frame_rate_hz: rig.conveyor.frame_rate_hz(),
        conveyor: ConveyorRecord {
            speed_m_per_min: rig.conveyor.speed_m_per_min(),
            motion_axis: rig.conveyor.motion_axis().into_inner().into(),
        },
        sensor: [rig.camera.width(), rig.camera.height()],
        frames: records,
    };
    manifest.save(&dir)?;
    let truth = &staged.truth;
    let record = GroundTruthRecord {
        schema: 1,
        scenario_id: scenario.id.clone(),
        model_id: scenario.model_id.clone(),
        class: scenario.spec.class.clone(),
        length: scenario.spec.length,
        width: scenario.spec.width,
        tilt_deg: scenario.spec.tilt.degrees(),
        normal: truth.normal().into(),
        centroid: truth.centroid.coords.into(),
        frames: staged.frames,
        spec: scenario.spec.clone(),
    };
    std::fs::write(dir.join(GROUND_TRUTH_FILE), serde_json::to_string_pretty(&record)?)?;
    rig.calibration().save(dir.join(CALIBRATION_FILE))?;
    Ok(SuiteEntry {
        id: scenario.id.clone(),
        dir: scenario.id.clone(),
        class: scenario.spec.class.clone(),
        model_id: scenario.model_id.clone(),
        tilt_deg: scenario.spec.tilt.degrees(),
        seed: scenario.spec.seed,
        frames: staged.frames,
    })
}

/// Renders every scenario and writes the suite manifest.
pub fn write_suite(root: impl AsRef<Path>, scenarios: &[Scenario], rig: &Rig) -> Result<SuiteManifest, SimError> {
    std::fs::create_dir_all(root.as_ref())?;
    let scenarios = scenarios
        .iter()
        .map(|s| write_scenario(root.as_ref(), s, rig))
        .collect::<Result<Vec<_>, _>>()?;
    let manifest = SuiteManifest { schema: 1, scenarios };
    manifest.save(root)?;
    Ok(manifest)
}
