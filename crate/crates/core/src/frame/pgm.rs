use std::io::{BufReader, BufWriter};
use std::path::Path;

use image::codecs::pnm::{PnmDecoder, PnmEncoder, PnmSubtype, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder};

use super::{Frame, FrameError};

/// Writes a binary (P5) 8-bit PGM.
pub fn write_pgm(path: impl AsRef<Path>, frame: &Frame) -> Result<(), FrameError> {
    let file = BufWriter::new(std::fs::File::create(path)?);
    PnmEncoder::new(file)
        .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
        .write_image(&frame.pixels, frame.width as u32, frame.height as u32, ExtendedColorType::L8)?;
    Ok(())
}

/// Reads an 8-bit PGM; deeper or color images are converted to 8-bit gray.
pub fn read_pgm(path: impl AsRef<Path>) -> Result<Frame, FrameError> {
    let decoder = PnmDecoder::new(BufReader::new(std::fs::File::open(path)?))?;
    let gray = DynamicImage::from_decoder(decoder)?.into_luma8();
    let (w, h) = gray.dimensions();
    Frame::new(w as usize, h as usize, gray.into_raw())
}
