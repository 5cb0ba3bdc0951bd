//! Pipeline configuration, read from a TOML file.
//!
//! Every key is optional. Relative paths resolve against the directory of
//! the configuration file.
//!
//! ```toml
//! max_gap = 5
//! k = 3
//!
//! [paths]
//! calibration = "calibration.json"   # default: <scan dir>/calibration.json
//! catalog = "catalog.json"           # default: built-in catalog
//! training = "training.json"         # required to classify
//!
//! [scan]
//! cell_size = 0.001
//! extract = { threshold = 20 }
//!
//! [features]
//! num_slices = 40
//!
//! [planner]
//! stroke_spacing = 0.10
//!
//! [reference]
//! normal = [1.0, 0.0, 0.0]
//! up = [0.0, 1.0, 0.0]
//! ```

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use spraycell_core::features::FeatureConfig;
use spraycell_core::nalgebra::Vector3;
use spraycell_core::planner::PlannerConfig;
use spraycell_core::pose::VerticalReference;
use spraycell_core::reconstruction::ScanConfig;
use spraycell_core::simulator::SuiteRequest;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub calibration: Option<PathBuf>,
    pub catalog: Option<PathBuf>,
    pub training: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceConfig {
    pub normal: [f64; 3],
    pub up: [f64; 3],
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self {
            normal: [1.0, 0.0, 0.0],
            up: [0.0, 1.0, 0.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Longest run of empty cells interpolated along a matrix row or column.
    pub max_gap: usize,
    /// Neighbors consulted when a training file is a bare sample list.
    pub k: usize,
    /// Overrides the catalog's own match tolerance.
    pub match_tolerance: Option<f64>,
    pub paths: PathsConfig,
    pub scan: ScanConfig,
    pub features: FeatureConfig,
    pub planner: PlannerConfig,
    pub reference: ReferenceConfig,
    pub simulate: SuiteRequest,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            max_gap: 5,
            k: 3,
            match_tolerance: None,
            paths: PathsConfig::default(),
            scan: ScanConfig::default(),
            features: FeatureConfig::default(),
            planner: PlannerConfig::default(),
            reference: ReferenceConfig::default(),
            simulate: SuiteRequest::default(),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut config: Self = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut config.paths.calibration, &mut config.paths.catalog, &mut config.paths.training]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.scan;
        ensure!(s.extract.threshold >= 1, "scan.extract.threshold must be at least 1");
        ensure!(s.extract.max_run_px >= 1, "scan.extract.max_run_px must be at least 1");
        ensure!(s.cell_size > 0.0 && s.cell_size <= 0.1, "scan.cell_size must be in (0, 0.1] m");
        ensure!(s.margin >= 0.0 && s.margin.is_finite(), "scan.margin must be non-negative");
        ensure!(self.max_gap <= 1000, "max_gap must be at most 1000 cells");
        ensure!(self.k % 2 == 1, "k must be odd and positive");
        if let Some(t) = self.match_tolerance {
            ensure!(t > 0.0 && t < 1.0, "match_tolerance must be in (0, 1)");
        }
        let f = &self.features;
        ensure!(f.num_slices >= 1, "features.num_slices must be at least 1");
        ensure!(f.mad_multiplier > 0.0, "features.mad_multiplier must be positive");
        ensure!(f.plane_samples >= 10, "features.plane_samples must be at least 10");
        let p = &self.planner;
        for (name, v) in [
            ("stroke_spacing", p.stroke_spacing),
            ("standoff", p.standoff),
            ("travel_speed", p.travel_speed),
            ("margin", p.margin),
            ("pose_step", p.pose_step),
            ("max_fit_residual", p.max_fit_residual),
        ] {
            ensure!(v > 0.0 && v.is_finite(), "planner.{name} must be positive");
        }
        self.vertical_reference()?;
        for (name, path) in [
            ("calibration", &self.paths.calibration),
            ("catalog", &self.paths.catalog),
            ("training", &self.paths.training),
        ] {
            if let Some(path) = path {
                if !path.is_file() {
                    bail!("paths.{name}: {} does not exist", path.display());
                }
            }
        }
        Ok(())
    }

    pub fn vertical_reference(&self) -> Result<VerticalReference> {
        VerticalReference::new(Vector3::from(self.reference.normal), Vector3::from(self.reference.up))
            .context("reference.normal and reference.up must be non-zero and orthogonal")
    }
}
