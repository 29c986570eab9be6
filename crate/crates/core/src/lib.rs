//! Multispectral image restoration with generalized opponent transformation
//! total variation (GOTTV).
//!
//! The crate is organized bottom-up:
//!
//! - [`tensor`], [`diff`], [`fft`], [`kernel`]: image cubes, periodic
//!   differences, FFT plans and blur operators.
//! - [`opponent`]: the opponent-transform family `Q = B P`, the coupling
//!   matrix `C_d` and its three-channel decomposition.
//! - [`regularizers`]: GOTTV, SVTV and the TV / VTV / SSAHTV / ASSTV
//!   baselines.
//! - [`solver`]: the ADMM engine.
//! - [`degrade`], [`metrics`]: synthetic degradation and PSNR/SSIM.
//! - [`io`], [`config`], [`render`], [`sweep`], [`cli`]: file format,
//!   configuration, PNG export and the command-line front end.

pub mod cli;
pub mod config;
pub mod degrade;
pub mod diff;
pub mod error;
pub mod fft;
pub mod io;
pub mod kernel;
pub mod metrics;
pub mod opponent;
pub mod regularizers;
pub mod render;
pub mod solver;
pub mod sweep;
pub mod tensor;

pub use error::{Error, Result};
pub use kernel::{gaussian_kernel, BlurKernel};
pub use opponent::OpponentBasis;
pub use regularizers::{ModelKind, PixelWeights, Regularizer};
pub use solver::{admm_restore, AdmmConfig, SolveReport};
pub use tensor::MsiTensor;
