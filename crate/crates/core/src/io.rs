//! The MSIRAW01 container.
//!
//! Layout: 8-byte magic `MSIRAW01`, then `m`, `n`, `d` as little-endian
//! `u32`, a one-byte dtype tag (0 = f32, 1 = f64), then `m*n*d` samples,
//! channel-planar and row-major within each channel, little-endian.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::MsiTensor;

pub const MAGIC: &[u8; 8] = b"MSIRAW01";
pub const HEADER_LEN: usize = 8 + 3 * 4 + 1;

/// On-disk sample type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dtype {
    F32,
    #[default]
    F64,
}

impl Dtype {
    pub fn tag(self) -> u8 {
        match self {
            Dtype::F32 => 0,
            Dtype::F64 => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Dtype::F32),
            1 => Ok(Dtype::F64),
            other => Err(Error::UnknownDtype(other)),
        }
    }

    pub fn size(self) -> usize {
        match self {
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }
}

impl std::str::FromStr for Dtype {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "f32" => Ok(Dtype::F32),
            "f64" => Ok(Dtype::F64),
            other => Err(Error::Config(format!("unknown dtype '{other}'"))),
        }
    }
}

/// Parsed header fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MsiFileHeader {
    pub rows: u32,
    pub cols: u32,
    pub channels: u32,
    pub dtype: Dtype,
}

impl MsiFileHeader {
    pub fn payload_len(&self) -> Option<usize> {
        (self.rows as usize)
            .checked_mul(self.cols as usize)?
            .checked_mul(self.channels as usize)?
            .checked_mul(self.dtype.size())
    }
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().expect("four bytes"))
}

/// Decodes an in-memory MSIRAW01 image; `path` is only used in errors.
pub fn decode_msi(bytes: &[u8], path: &Path) -> Result<MsiTensor> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::BadMagic(path.to_path_buf()));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::TruncatedPayload(path.to_path_buf()));
    }
    let header = MsiFileHeader {
        rows: read_u32(bytes, 8),
        cols: read_u32(bytes, 12),
        channels: read_u32(bytes, 16),
        dtype: Dtype::from_tag(bytes[20])?,
    };
    if header.rows == 0 || header.cols == 0 || header.channels == 0 {
        return Err(Error::InvalidDimensions(format!(
            "header declares {}x{}x{}",
            header.rows, header.cols, header.channels
        )));
    }
    let need = header
        .payload_len()
        .ok_or_else(|| Error::InvalidDimensions("header size overflows".into()))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() < need {
        return Err(Error::TruncatedPayload(path.to_path_buf()));
    }
    if payload.len() > need {
        return Err(Error::TrailingBytes(path.to_path_buf()));
    }
    let data: Vec<f64> = match header.dtype {
        Dtype::F32 => payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("four bytes")) as f64)
            .collect(),
        Dtype::F64 => payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("eight bytes")))
            .collect(),
    };
    MsiTensor::from_vec(
        header.rows as usize,
        header.cols as usize,
        header.channels as usize,
        data,
    )
}

/// Encodes `image` as MSIRAW01 bytes.
pub fn encode_msi(image: &MsiTensor, dtype: Dtype) -> Result<Vec<u8>> {
    let (m, n, d) = image.shape();
    let dim = |v: usize| {
        u32::try_from(v).map_err(|_| Error::InvalidDimensions(format!("{v} exceeds u32")))
    };
    let mut out = Vec::with_capacity(HEADER_LEN + m * n * d * dtype.size());
    out.extend_from_slice(MAGIC);
    for v in [m, n, d] {
        out.extend_from_slice(&dim(v)?.to_le_bytes());
    }
    out.push(dtype.tag());
    match dtype {
        Dtype::F32 => image
            .as_slice()
            .iter()
            .for_each(|&v| out.extend_from_slice(&(v as f32).to_le_bytes())),
        Dtype::F64 => image
            .as_slice()
            .iter()
            .for_each(|v| out.extend_from_slice(&v.to_le_bytes())),
    }
    Ok(out)
}

pub fn read_msi(path: impl AsRef<Path>) -> Result<MsiTensor> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    decode_msi(&bytes, path)
}

pub fn write_msi(path: impl AsRef<Path>, image: &MsiTensor, dtype: Dtype) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_msi(image, dtype)?;
    fs::write(path, bytes).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
