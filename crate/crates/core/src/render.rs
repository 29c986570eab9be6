//! 8-bit PNG export.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::MsiTensor;

/// Clamps to `[0, 1]` and rounds half-up to `0..=255`.
pub fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

/// Interleaved 8-bit samples of a one- or three-channel image.
pub fn to_bytes(image: &MsiTensor) -> Result<Vec<u8>> {
    let d = image.channels();
    if d != 1 && d != 3 {
        return Err(Error::DimensionMismatch(format!(
            "png export needs 1 or 3 channels, got {d}"
        )));
    }
    let len = image.plane_len();
    let data = image.as_slice();
    Ok((0..len)
        .flat_map(|p| (0..d).map(move |k| to_u8(data[k * len + p])))
        .collect())
}

/// Writes a grayscale or RGB PNG.
pub fn write_png(path: impl AsRef<Path>, image: &MsiTensor) -> Result<()> {
    let path = path.as_ref();
    let bytes = to_bytes(image)?;
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let w = |v: usize| {
        u32::try_from(v).map_err(|_| Error::InvalidDimensions(format!("{v} exceeds u32")))
    };
    let mut encoder = png::Encoder::new(BufWriter::new(file), w(image.cols())?, w(image.rows())?);
    encoder.set_color(if image.channels() == 3 {
        png::ColorType::Rgb
    } else {
        png::ColorType::Grayscale
    });
    encoder.set_depth(png::BitDepth::Eight);
    let png_err = |e: png::EncodingError| Error::Png(e.to_string());
    let mut writer = encoder.write_header().map_err(png_err)?;
    writer.write_image_data(&bytes).map_err(png_err)?;
    writer.finish().map_err(png_err)
}
