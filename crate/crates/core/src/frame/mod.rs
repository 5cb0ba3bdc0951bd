//! Camera frames, laser-line extraction and per-frame triangulation.

mod extract;
mod manifest;
mod pgm;

pub use extract::{
    extract_laser_line, profile_to_points, ExtractConfig, LaserProfile, LineAxis, ProfileDiagnostics,
    ProfileEntry, TriangulatedProfile,
};
pub use manifest::{frame_file_name, ConveyorRecord, FrameRecord, ScanManifest, MANIFEST_FILE};
pub use pgm::{read_pgm, write_pgm};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("frame buffer has {got} bytes, expected {width}x{height}")]
    SizeMismatch { width: usize, height: usize, got: usize },
    #[error("frame index {index} does not follow {previous}")]
    IndexOrder { previous: u64, index: u64 },
    #[error("image I/O: {0}")]
    Image(#[from] image::ImageError),
    #[error("I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("manifest: {0}")]
    Manifest(String),
    #[error("parsing manifest: {0}")]
    Json(#[from] serde_json::Error),
}

/// One 8-bit grayscale camera frame.
///
/// A frame may be a sensor window (region of interest); `roi_origin` is the
/// sensor pixel `[u, v]` of its top-left corner.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
    pub index: u64,
    pub timestamp: f64,
    pub roi_origin: [usize; 2],
}

impl Frame {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, FrameError> {
        if pixels.len() != width * height {
            return Err(FrameError::SizeMismatch {
                width,
                height,
                got: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
            index: 0,
            timestamp: 0.0,
            roi_origin: [0, 0],
        })
    }

    pub fn dark(width: usize, height: usize) -> Self {
        Self::new(width, height, vec![0; width * height]).expect("sized buffer")
    }

    pub fn with_index(mut self, index: u64, timestamp: f64) -> Self {
        self.index = index;
        self.timestamp = timestamp;
        self
    }

    pub fn with_roi_origin(mut self, origin: [usize; 2]) -> Self {
        self.roi_origin = origin;
        self
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> u8 {
        self.pixels[v * self.width + u]
    }

    #[inline]
    pub fn set(&mut self, u: usize, v: usize, value: u8) {
        self.pixels[v * self.width + u] = value;
    }
}

/// `1` where the intensity is at least `threshold`, `0` elsewhere.
pub fn binarize(frame: &Frame, threshold: u8) -> Frame {
    Frame {
        pixels: frame.pixels.iter().map(|&p| u8::from(p >= threshold)).collect(),
        ..frame.clone()
    }
}
