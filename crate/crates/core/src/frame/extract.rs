use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use super::Frame;
use crate::geometry::{intersect_ray_plane, CameraModel, GeometryError, LaserPlane, Pixel};

/// Which image axis the laser line runs along.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineAxis {
    /// One sample per column; the profile position is a row coordinate.
    #[default]
    Columns,
    /// One sample per row, for rigs where the line crosses the rows.
    Rows,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractConfig {
    pub threshold: u8,
    /// Longer above-threshold runs are treated as blobs and rejected.
    pub max_run_px: usize,
    pub axis: LineAxis,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            threshold: 128,
            max_run_px: 15,
            axis: LineAxis::Columns,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileEntry {
    /// Column (or row, for [`LineAxis::Rows`]) within the frame.
    pub index: usize,
    /// Sub-pixel position across the line, `None` when no line was found.
    pub position: Option<f64>,
}

/// The laser line of one frame, at most one sample per scan index.
#[derive(Debug, Clone, PartialEq)]
pub struct LaserProfile {
    pub axis: LineAxis,
    pub entries: Vec<ProfileEntry>,
    pub threshold_used: u8,
    pub roi_origin: [usize; 2],
    pub frame_index: u64,
}

impl LaserProfile {
    pub fn valid(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.entries.iter().filter_map(|e| e.position.map(|p| (e.index, p)))
    }

    pub fn valid_count(&self) -> usize {
        self.valid().count()
    }

    /// Sensor pixel for a profile sample.
    pub fn sensor_pixel(&self, index: usize, position: f64) -> Pixel {
        let [u0, v0] = self.roi_origin;
        match self.axis {
            LineAxis::Columns => Pixel::new((u0 + index) as f64, v0 as f64 + position),
            LineAxis::Rows => Pixel::new(u0 as f64 + position, (v0 + index) as f64),
        }
    }
}

/// Sub-pixel laser line: per scan index, the intensity-weighted centroid of
/// the above-threshold run that contains the brightest pixel.
pub fn extract_laser_line(frame: &Frame, config: &ExtractConfig) -> LaserProfile {
    let (count, len) = match config.axis {
        LineAxis::Columns => (frame.width, frame.height),
        LineAxis::Rows => (frame.height, frame.width),
    };
    let mut line = vec![0u8; len];
    let entries = (0..count)
        .map(|index| {
            for (k, slot) in line.iter_mut().enumerate() {
                *slot = match config.axis {
                    LineAxis::Columns => frame.get(index, k),
                    LineAxis::Rows => frame.get(k, index),
                };
            }
            ProfileEntry {
                index,
                position: line_centroid(&line, config.threshold, config.max_run_px),
            }
        })
        .collect();
    LaserProfile {
        axis: config.axis,
        entries,
        threshold_used: config.threshold,
        roi_origin: frame.roi_origin,
        frame_index: frame.index,
    }
}

fn line_centroid(samples: &[u8], threshold: u8, max_run: usize) -> Option<f64> {
    // First brightest pixel.
    let (peak, &peak_value) = samples
        .iter()
        .enumerate()
        .rev()
        .max_by_key(|&(_, v)| *v)?;
    if peak_value < threshold {
        return None;
    }
    let mut start = peak;
    while start > 0 && samples[start - 1] >= threshold {
        start -= 1;
    }
    let mut end = peak + 1;
    while end < samples.len() && samples[end] >= threshold {
        end += 1;
    }
    if end - start > max_run {
        return None;
    }
    let (mut weight, mut moment) = (0.0, 0.0);
    for (offset, &v) in samples[start..end].iter().enumerate() {
        weight += f64::from(v);
        moment += f64::from(v) * offset as f64;
    }
    Some(start as f64 + moment / weight)
}

/// Drop tallies from triangulating one profile.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileDiagnostics {
    pub valid_samples: usize,
    pub triangulated: usize,
    pub dropped_parallel: usize,
    pub dropped_behind: usize,
    pub dropped_undistort: usize,
}

impl std::ops::AddAssign for ProfileDiagnostics {
    fn add_assign(&mut self, o: Self) {
        self.valid_samples += o.valid_samples;
        self.triangulated += o.triangulated;
        self.dropped_parallel += o.dropped_parallel;
        self.dropped_behind += o.dropped_behind;
        self.dropped_undistort += o.dropped_undistort;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriangulatedProfile {
    pub points: Vec<Point3<f64>>,
    pub diagnostics: ProfileDiagnostics,
}

/// Undistort, backproject and intersect every valid sample with the laser
/// plane. Samples that cannot be triangulated are counted, not returned.
pub fn profile_to_points(profile: &LaserProfile, camera: &CameraModel, plane: &LaserPlane) -> TriangulatedProfile {
    let mut diagnostics = ProfileDiagnostics::default();
    let mut points = Vec::with_capacity(profile.entries.len());
    for (index, position) in profile.valid() {
        diagnostics.valid_samples += 1;
        let pixel = match camera.undistort(profile.sensor_pixel(index, position)) {
            Ok(p) => p,
            Err(_) => {
                diagnostics.dropped_undistort += 1;
                continue;
            }
        };
        match intersect_ray_plane(&camera.backproject(pixel), plane) {
            Ok(hit) => points.push(hit.point),
            Err(GeometryError::ParallelRay) => diagnostics.dropped_parallel += 1,
            Err(_) => diagnostics.dropped_behind += 1,
        }
    }
    diagnostics.triangulated = points.len();
    TriangulatedProfile { points, diagnostics }
}
