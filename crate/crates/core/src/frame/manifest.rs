//! Scan directory layout: `frame_%06d.pgm` files plus `manifest.json`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{read_pgm, write_pgm, Frame, FrameError};

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn frame_file_name(index: u64) -> String {
    format!("frame_{index:06}.pgm")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub index: u64,
    pub file: String,
    pub timestamp: f64,
    #[serde(default)]
    pub roi_origin: [usize; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConveyorRecord {
    pub speed_m_per_min: f64,
    pub motion_axis: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanManifest {
    pub schema: u32,
    pub scan_id: String,
    pub frame_rate_hz: f64,
    pub conveyor: ConveyorRecord,
    /// Sensor size the frames were cut from.
    pub sensor: [u32; 2],
    pub frames: Vec<FrameRecord>,
}

impl ScanManifest {
    pub fn load(dir: impl AsRef<Path>) -> Result<Self, FrameError> {
        let text = std::fs::read_to_string(dir.as_ref().join(MANIFEST_FILE))?;
        let manifest: Self = serde_json::from_str(&text)?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<(), FrameError> {
        if !(self.frame_rate_hz > 0.0) {
            return Err(FrameError::Manifest(format!("frame_rate_hz must be positive, got {}", self.frame_rate_hz)));
        }
        if self.frames.is_empty() {
            return Err(FrameError::Manifest("no frames listed".into()));
        }
        for pair in self.frames.windows(2) {
            if pair[1].index <= pair[0].index {
                return Err(FrameError::IndexOrder {
                    previous: pair[0].index,
                    index: pair[1].index,
                });
            }
        }
        Ok(())
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<(), FrameError> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(dir.as_ref().join(MANIFEST_FILE), text)?;
        Ok(())
    }

    pub fn frame_path(&self, dir: impl AsRef<Path>, record: &FrameRecord) -> PathBuf {
        dir.as_ref().join(&record.file)
    }

    pub fn read_frame(&self, dir: impl AsRef<Path>, record: &FrameRecord) -> Result<Frame, FrameError> {
        Ok(read_pgm(self.frame_path(dir, record))?
            .with_index(record.index, record.timestamp)
            .with_roi_origin(record.roi_origin))
    }

    /// Writes one frame and returns its manifest record.
    pub fn write_frame(dir: impl AsRef<Path>, frame: &Frame) -> Result<FrameRecord, FrameError> {
        let file = frame_file_name(frame.index);
        write_pgm(dir.as_ref().join(&file), frame)?;
        Ok(FrameRecord {
            index: frame.index,
            file,
            timestamp: frame.timestamp,
            roi_origin: frame.roi_origin,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn manifest(indices: &[u64]) -> ScanManifest {
        ScanManifest {
            schema: 1,
            scan_id: "t".into(),
            frame_rate_hz: 30.0,
            conveyor: ConveyorRecord {
                speed_m_per_min: 1.0,
                motion_axis: [0.0, 0.0, 1.0],
            },
            sensor: [8, 4],
            frames: indices
                .iter()
                .map(|&index| FrameRecord {
                    index,
                    file: frame_file_name(index),
                    timestamp: index as f64 / 30.0,
                    roi_origin: [0, 2],
                })
                .collect(),
        }
    }

    #[test]
    fn file_names_are_zero_padded() {
        assert_eq!(frame_file_name(42), "frame_000042.pgm");
    }

    #[test]
    fn indices_must_increase() {
        assert!(manifest(&[0, 1, 2]).validate().is_ok());
        assert!(matches!(manifest(&[0, 2, 2]).validate(), Err(FrameError::IndexOrder { .. })));
        assert!(manifest(&[]).validate().is_err());
    }

    #[test]
    fn frames_round_trip_through_directory() {
        let dir = tempfile::tempdir().unwrap();
        let m = manifest(&[3]);
        let mut f = Frame::dark(8, 4).with_index(3, 0.1).with_roi_origin([0, 2]);
        f.set(2, 1, 99);
        let rec = ScanManifest::write_frame(dir.path(), &f).unwrap();
        assert_eq!(rec.file, "frame_000003.pgm");
        m.save(dir.path()).unwrap();
        let back = ScanManifest::load(dir.path()).unwrap();
        let g = back.read_frame(dir.path(), &back.frames[0]).unwrap();
        assert_eq!(g.pixels, f.pixels);
        assert_eq!(g.roi_origin, [0, 2]);
    }
}
