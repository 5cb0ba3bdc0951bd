//! Frames to height matrix: extract, triangulate, accumulate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{AccumulateStats, ConveyorModel, HeightMatrix, ReconstructionError, ScanExtent};
use crate::frame::{extract_laser_line, profile_to_points, ExtractConfig, Frame, ProfileDiagnostics};
use crate::geometry::Calibration;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScanConfig {
    pub extract: ExtractConfig,
    /// Matrix cell size `S_c`, in meters.
    pub cell_size: f64,
    /// Extra border around the region the sensor window can see.
    pub margin: f64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            extract: ExtractConfig {
                threshold: 20,
                ..ExtractConfig::default()
            },
            cell_size: 0.001,
            margin: 0.01,
        }
    }
}

/// Incremental reconstruction of one scan.
#[derive(Debug, Clone)]
pub struct ScanBuilder {
    calibration: Calibration,
    conveyor: ConveyorModel,
    extract: ExtractConfig,
    matrix: HeightMatrix,
    pub diagnostics: ProfileDiagnostics,
    pub stats: AccumulateStats,
    pub frames: usize,
}

impl ScanBuilder {
    /// Sizes the matrix to everything `window` can see over `frame_count`
    /// frames of conveyor travel.
    pub fn new(
        calibration: &Calibration,
        conveyor: ConveyorModel,
        window: [[f64; 2]; 2],
        frame_count: u64,
        config: &ScanConfig,
    ) -> Result<Self, ReconstructionError> {
        let extent = ScanExtent::from_rig(&calibration.camera, &calibration.laser, window, &conveyor, frame_count)?
            .grow(config.margin);
        Ok(Self {
            calibration: calibration.clone(),
            conveyor,
            extract: config.extract,
            matrix: HeightMatrix::covering(&extent, config.cell_size)?,
            diagnostics: ProfileDiagnostics::default(),
            stats: AccumulateStats::default(),
            frames: 0,
        })
    }

    pub fn add_frame(&mut self, frame: &Frame) {
        self.add_frames(std::slice::from_ref(frame));
    }

    /// Extracts and triangulates in parallel, then accumulates in order.
    pub fn add_frames(&mut self, frames: &[Frame]) {
        let (camera, laser, extract) = (&self.calibration.camera, &self.calibration.laser, &self.extract);
        let profiles: Vec<_> = frames
            .par_iter()
            .map(|f| (f.index, profile_to_points(&extract_laser_line(f, extract), camera, laser)))
            .collect();
        for (index, tri) in profiles {
            self.diagnostics += tri.diagnostics;
            self.stats += self.matrix.accumulate(&tri.points, index, &self.conveyor);
            self.frames += 1;
        }
    }

    pub fn matrix(&self) -> &HeightMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> HeightMatrix {
        self.matrix
    }
}
