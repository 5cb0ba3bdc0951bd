//! Border, size, slope and profile features of a finished height matrix.
//!
//! The profile features are slice variances of depth:
//!
//! ```text
//! var_m = (1/M) * sum_m (1/N_m) * sum_{c in slice m} (x_c - mean_m)^2
//! ```
//!
//! Horizontal slices are bands of rows, vertical slices bands of columns.

mod border;
mod dimensions;
mod plane;
mod slices;

pub use border::{extract_border, largest_component, trace_border, BorderSet, Component};
pub use dimensions::{estimate_dimensions, estimate_dimensions_on_plane, Dimensions};
pub use plane::{fit_plane_svd, remove_outliers, sample_surface_points, OutlierFilter, PlaneFit, PLANE_SAMPLE_SIZE};
pub use slices::{slice_variance, slice_variance_in, SliceDirection};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pose::VerticalReference;
use crate::reconstruction::HeightMatrix;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FeatureError {
    #[error("height matrix has no valid cells")]
    EmptyMatrix,
    #[error("need at least 10 points for outlier removal or 3 for a plane, got {got}")]
    TooFewPoints { got: usize },
    #[error("points are collinear; no unique plane")]
    DegenerateGeometry,
    #[error("no valid cells inside the eroded region")]
    NoValidCells,
}

/// Classifier input: slice variances (mm^2) and canonical dimensions (m).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub var_horiz: f64,
    pub var_vert: f64,
    pub length: f64,
    pub width: f64,
}

impl FeatureVector {
    pub fn profile(&self) -> [f64; 2] {
        [self.var_horiz, self.var_vert]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureConfig {
    pub num_slices: usize,
    pub erosion: usize,
    pub mad_multiplier: f64,
    pub plane_samples: usize,
    pub sample_seed: u64,
    /// Measure slice depths from the fitted plane.
    pub level: bool,
    /// Measure dimensions in the fitted plane rather than the `y`/`z` axes.
    pub on_plane_dimensions: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        Self {
            num_slices: 40,
            erosion: 2,
            mad_multiplier: 3.0,
            plane_samples: PLANE_SAMPLE_SIZE,
            sample_seed: 0,
            level: true,
            on_plane_dimensions: true,
        }
    }
}

/// Everything extracted from one height matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Features {
    pub vector: FeatureVector,
    pub fit: PlaneFit,
    pub border: BorderSet,
    pub dimensions: Dimensions,
    pub kept_fraction: f64,
}

pub fn extract_features(
    matrix: &HeightMatrix,
    config: &FeatureConfig,
    reference: &VerticalReference,
) -> Result<Features, FeatureError> {
    let component = largest_component(matrix)?;
    let border = trace_border(&component);
    let sample = sample_surface_points(matrix, &component, config.plane_samples, config.sample_seed);
    let filtered = remove_outliers(&sample, config.mad_multiplier)?;
    let fit = fit_plane_svd(&filtered.kept, reference)?;
    let region = component.eroded(config.erosion);
    let level = config.level.then_some(&fit);
    let var_horiz = slice_variance_in(matrix, &region, SliceDirection::Horizontal, config.num_slices, level)?;
    let var_vert = slice_variance_in(matrix, &region, SliceDirection::Vertical, config.num_slices, level)?;
    let dimensions = if config.on_plane_dimensions {
        estimate_dimensions_on_plane(&border, matrix, &fit, reference)
    } else {
        estimate_dimensions(&border, matrix)
    };
    Ok(Features {
        vector: FeatureVector {
            var_horiz,
            var_vert,
            length: dimensions.length,
            width: dimensions.width,
        },
        fit,
        border,
        dimensions,
        kept_fraction: filtered.kept_fraction,
    })
}

/// Feature report file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureReport {
    pub schema: u32,
    pub var_horiz_mm2: f64,
    pub var_vert_mm2: f64,
    pub length_m: f64,
    pub width_m: f64,
    pub tilt_deg: [f64; 2],
    pub rms_residual_m: f64,
    pub border_cells: usize,
}

impl From<&Features> for FeatureReport {
    fn from(f: &Features) -> Self {
        Self {
            schema: 1,
            var_horiz_mm2: f.vector.var_horiz,
            var_vert_mm2: f.vector.var_vert,
            length_m: f.vector.length,
            width_m: f.vector.width,
            tilt_deg: f.fit.tilt.degrees(),
            rms_residual_m: f.fit.rms_residual,
            border_cells: f.border.cells.len(),
        }
    }
}

impl FeatureReport {
    pub fn vector(&self) -> FeatureVector {
        FeatureVector {
            var_horiz: self.var_horiz_mm2,
            var_vert: self.var_vert_mm2,
            length: self.length_m,
            width: self.width_m,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reconstruction::CellState;

    #[test]
    fn report_json_has_expected_keys() {
        let mut m = HeightMatrix::new(60, 50, 0.001, 0.0, 0.0).unwrap();
        for i in 5..55 {
            for j in 5..45 {
                let d = 0.002 * ((i * 7 + j * 3) % 5) as f64;
                m.set(i, j, d, CellState::Measured);
            }
        }
        let f = extract_features(&m, &FeatureConfig::default(), &VerticalReference::default()).unwrap();
        assert!((f.vector.length - 0.050).abs() < 1e-3 && (f.vector.width - 0.040).abs() < 1e-3);
        let json = serde_json::to_value(FeatureReport::from(&f)).unwrap();
        for key in ["schema", "var_horiz_mm2", "var_vert_mm2", "length_m", "width_m", "tilt_deg", "rms_residual_m", "border_cells"] {
            assert!(json.get(key).is_some(), "{key}");
        }
        assert_eq!(json["schema"], 1);
    }
}
