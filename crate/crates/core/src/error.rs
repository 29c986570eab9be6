use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the restoration toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDimensions(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("kernel exceeds image extent")]
    KernelTooLarge,
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("opponent basis needs at least 2 channels")]
    TooFewChannels,
    #[error("H_d requires at least 3 channels")]
    TooFewChannelsForH,
    #[error("enumeration too large (d = {0})")]
    EnumerationTooLarge(usize),
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("singular normal equations")]
    SingularSystem,
    #[error("divergence detected at iteration {iteration}: {what}")]
    Divergence {
        iteration: usize,
        what: &'static str,
    },
    #[error("dense oracle size guard: {0}")]
    OracleTooLarge(String),
    #[error("image smaller than the {0}x{0} SSIM window")]
    ImageTooSmall(usize),
    #[error("band index {0} out of range 1..={1}")]
    BandOutOfRange(usize, usize),
    #[error("bad magic in {0}")]
    BadMagic(PathBuf),
    #[error("truncated payload in {0}")]
    TruncatedPayload(PathBuf),
    #[error("trailing bytes after payload in {0}")]
    TrailingBytes(PathBuf),
    #[error("unknown dtype tag {0}")]
    UnknownDtype(u8),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("png encoding failed: {0}")]
    Png(String),
}

pub type Result<T> = std::result::Result<T, Error>;
