//! Grid search over regularization parameters, scored by MPSNR.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::BlurKernel;
use crate::metrics::mpsnr;
use crate::regularizers::{ModelKind, Regularizer};
use crate::solver::{admm_restore, AdmmConfig};
use crate::tensor::MsiTensor;

/// One evaluated grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub lambda: f64,
    pub alpha: f64,
    pub mpsnr: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub best: SweepPoint,
    /// Lambda-major, in grid order.
    pub points: Vec<SweepPoint>,
}

/// Restores `observed` at every `(lambda, alpha)` pair and keeps the
/// highest MPSNR against `reference`. Models without `alpha` only sweep
/// `lambda`. Points run concurrently; ties keep the earliest grid point.
#[allow(clippy::too_many_arguments)]
pub fn sweep(
    observed: &MsiTensor,
    reference: &MsiTensor,
    kernel: &BlurKernel,
    kind: ModelKind,
    lambdas: &[f64],
    alphas: &[f64],
    mu: f64,
    base: &AdmmConfig,
) -> Result<SweepResult> {
    observed.ensure_same_shape(reference, "sweep")?;
    let alphas: &[f64] = if kind.uses_alpha() { alphas } else { &[1.0] };
    if lambdas.is_empty() || alphas.is_empty() {
        return Err(Error::Config("sweep grid is empty".into()));
    }
    let grid: Vec<(f64, f64)> = lambdas
        .iter()
        .flat_map(|&l| alphas.iter().map(move |&a| (l, a)))
        .collect();
    let points: Vec<SweepPoint> = grid
        .par_iter()
        .map(|&(lambda, alpha)| {
            let reg = Regularizer::for_kind(kind, observed, alpha, mu)?;
            let config = AdmmConfig {
                lambda,
                track_objective: false,
                ..base.clone()
            };
            let (restored, report) = admm_restore(observed, kernel, &reg, &config)?;
            Ok(SweepPoint {
                lambda,
                alpha,
                mpsnr: mpsnr(reference, &restored)?,
                iterations: report.iterations,
            })
        })
        .collect::<Result<_>>()?;
    let best = points
        .iter()
        .fold(None::<&SweepPoint>, |acc, p| match acc {
            Some(b) if b.mpsnr >= p.mpsnr => Some(b),
            _ => Some(p),
        })
        .expect("grid is non-empty")
        .clone();
    Ok(SweepResult { best, points })
}

/// Parses a comma-separated list of reals.
pub fn parse_grid(text: &str) -> Result<Vec<f64>> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad grid value '{s}'")))
        })
        .collect()
}

/// `n` log-spaced values from `lo` to `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|t| (a + (b - a) * t as f64 / (n - 1) as f64).exp())
        .collect()
}
