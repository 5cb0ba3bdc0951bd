//! Per-scan run report, written as `report.json` next to the artifacts.
//!
//! Artifact paths are relative to the report's directory. The canonical form
//! drops `timings_ms`, so two runs over the same inputs compare byte-equal.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use spraycell_core::classifier::{MatchOutcome, ProfileClass};
use spraycell_core::features::FeatureReport;
use spraycell_core::frame::ProfileDiagnostics;
use spraycell_core::reconstruction::AccumulateStats;

use crate::exit::ExitStatus;

pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionSummary {
    pub frames: usize,
    pub rows: usize,
    pub cols: usize,
    pub cell_size: f64,
    pub measured_cells: usize,
    pub interpolated_cells: usize,
    pub profiles: ProfileDiagnostics,
    pub accumulate: AccumulateStats,
}

/// Comparison against a simulator ground-truth file found in the scan dir.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthCheck {
    pub class: ProfileClass,
    pub model_id: String,
    pub dimensions: [f64; 2],
    pub tilt_deg: [f64; 2],
    pub class_correct: bool,
    pub model_correct: bool,
    /// `|measured - true| / true` for length and width.
    pub dimension_error: [f64; 2],
    pub tilt_error_deg: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: u32,
    pub scan_id: String,
    pub status: ExitStatus,
    pub exit_code: i32,
    pub error: Option<String>,
    pub reconstruction: Option<ReconstructionSummary>,
    pub features: Option<FeatureReport>,
    pub class: Option<ProfileClass>,
    pub confidence: Option<f64>,
    /// Labels of the voting neighbors, nearest first.
    pub neighbors: Vec<ProfileClass>,
    pub model_id: Option<String>,
    #[serde(rename = "match")]
    pub match_outcome: Option<MatchOutcome>,
    /// Measured `[length, width]` in meters.
    pub dimensions: Option<[f64; 2]>,
    /// Measured `[pitch, yaw]` in degrees.
    pub tilt_deg: Option<[f64; 2]>,
    /// Plan file, present only when a plan was dispatched.
    pub plan: Option<String>,
    pub artifacts: Vec<String>,
    pub truth: Option<TruthCheck>,
    pub warnings: Vec<String>,
    pub timings_ms: BTreeMap<String, f64>,
}

impl RunReport {
    pub fn new(scan_id: impl Into<String>) -> Self {
        Self {
            schema: 1,
            scan_id: scan_id.into(),
            status: ExitStatus::Ok,
            exit_code: 0,
            error: None,
            reconstruction: None,
            features: None,
            class: None,
            confidence: None,
            neighbors: Vec::new(),
            model_id: None,
            match_outcome: None,
            dimensions: None,
            tilt_deg: None,
            plan: None,
            artifacts: Vec::new(),
            truth: None,
            warnings: Vec::new(),
            timings_ms: BTreeMap::new(),
        }
    }

    pub fn set_status(&mut self, status: ExitStatus) {
        self.status = status;
        self.exit_code = status.code();
    }

    /// Report JSON without timings.
    pub fn canonical_json(&self) -> String {
        let mut value = serde_json::to_value(self).expect("report serializes");
        if let Some(map) = value.as_object_mut() {
            map.remove("timings_ms");
        }
        serde_json::to_string_pretty(&value).expect("report serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let path = dir.as_ref().join(REPORT_FILE);
        std::fs::write(&path, serde_json::to_string_pretty(self)?).with_context(|| format!("writing {}", path.display()))
    }

    /// One-line human summary.
    pub fn summary_line(&self) -> String {
        let mut s = format!("{:<32} {:<16}", self.scan_id, self.status.name());
        if let Some(c) = &self.class {
            s += &format!(" class={c}");
        }
        if let Some(c) = self.confidence {
            s += &format!(" conf={c:.2}");
        }
        if let Some(m) = &self.model_id {
            s += &format!(" model={m}");
        }
        if let Some([l, w]) = self.dimensions {
            s += &format!(" dims={:.1}x{:.1}mm", l * 1e3, w * 1e3);
        }
        if let Some([p, y]) = self.tilt_deg {
            s += &format!(" tilt={p:.2}/{y:.2}deg");
        }
        if let Some(e) = &self.error {
            s += &format!(" error=\"{e}\"");
        }
        s
    }
}
