//! Regularizer values and the restoration objective.

use std::fmt;
use std::str::FromStr;

use crate::diff::{diff_spectral, diff_x, diff_y};
use crate::error::{Error, Result};
use crate::fft::circular_convolve;
use crate::kernel::BlurKernel;
use crate::opponent::{build_b, OpponentBasis};
use crate::tensor::MsiTensor;

/// Default SSAHTV edge sensitivity.
pub const DEFAULT_SSAHTV_MU: f64 = 0.5;

/// Names of the supported restoration models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Gottv,
    Tv,
    Vtv,
    Ssahtv,
    Asstv,
    Svtv,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Gottv,
        ModelKind::Tv,
        ModelKind::Vtv,
        ModelKind::Ssahtv,
        ModelKind::Asstv,
        ModelKind::Svtv,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Gottv => "gottv",
            ModelKind::Tv => "tv",
            ModelKind::Vtv => "vtv",
            ModelKind::Ssahtv => "ssahtv",
            ModelKind::Asstv => "asstv",
            ModelKind::Svtv => "svtv",
        }
    }

    pub fn uses_alpha(self) -> bool {
        matches!(self, ModelKind::Gottv | ModelKind::Svtv)
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .iter()
            .copied()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown model '{s}'")))
    }
}

/// Per-pixel nonnegative weights on an `rows x cols` grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PixelWeights {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl PixelWeights {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != rows * cols {
            return Err(Error::DimensionMismatch("weight grid size".into()));
        }
        if values.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Config(
                "weights must be finite and nonnegative".into(),
            ));
        }
        Ok(Self { rows, cols, values })
    }

    pub fn uniform(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            values: vec![1.0; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }
}

/// A fully parameterized regularizer.
#[derive(Debug, Clone, PartialEq)]
pub enum Regularizer {
    Gottv { basis: OpponentBasis, alpha: f64 },
    Svtv { alpha: f64 },
    Tv,
    Vtv,
    Ssahtv { weights: PixelWeights },
    Asstv,
}

impl Regularizer {
    pub fn gottv(basis: OpponentBasis, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Regularizer::Gottv { basis, alpha })
    }

    pub fn svtv(alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        Ok(Regularizer::Svtv { alpha })
    }

    /// SSAHTV with weights derived from the observed image.
    pub fn ssahtv(observed: &MsiTensor, mu: f64) -> Result<Self> {
        Ok(Regularizer::Ssahtv {
            weights: ssahtv_weights(observed, mu)?,
        })
    }

    /// Builds the regularizer named by `kind` for an observed image with
    /// `d` channels. GOTTV uses the canonical basis `B`.
    pub fn for_kind(kind: ModelKind, observed: &MsiTensor, alpha: f64, mu: f64) -> Result<Self> {
        match kind {
            ModelKind::Gottv => Self::gottv(build_b(observed.channels())?, alpha),
            ModelKind::Svtv => {
                if observed.channels() != 3 {
                    return Err(Error::DimensionMismatch(format!(
                        "svtv needs 3 channels, got {}",
                        observed.channels()
                    )));
                }
                Self::svtv(alpha)
            }
            ModelKind::Tv => Ok(Regularizer::Tv),
            ModelKind::Vtv => Ok(Regularizer::Vtv),
            ModelKind::Ssahtv => Self::ssahtv(observed, mu),
            ModelKind::Asstv => Ok(Regularizer::Asstv),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Regularizer::Gottv { .. } => ModelKind::Gottv,
            Regularizer::Svtv { .. } => ModelKind::Svtv,
            Regularizer::Tv => ModelKind::Tv,
            Regularizer::Vtv => ModelKind::Vtv,
            Regularizer::Ssahtv { .. } => ModelKind::Ssahtv,
            Regularizer::Asstv => ModelKind::Asstv,
        }
    }

    pub fn value(&self, image: &MsiTensor) -> Result<f64> {
        match self {
            Regularizer::Gottv { basis, alpha } => gottv_value(image, basis, *alpha),
            Regularizer::Svtv { alpha } => svtv_value(image, *alpha),
            Regularizer::Tv => Ok(tv_value(image)),
            Regularizer::Vtv => Ok(vtv_value(image)),
            Regularizer::Ssahtv { weights } => ssahtv_value(image, weights),
            Regularizer::Asstv => Ok(asstv_value(image)),
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(Error::Config(format!(
            "alpha must be positive, got {alpha}"
        )))
    }
}

/// Opponent-domain total variation: a joint `l2` penalty over the `d - 1`
/// opponent components of both gradients plus `alpha` times the penalty on
/// the averaging component.
pub fn gottv_value(image: &MsiTensor, basis: &OpponentBasis, alpha: f64) -> Result<f64> {
    let d = basis.dim();
    if image.channels() != d {
        return Err(Error::DimensionMismatch(format!(
            "image has {} channels, basis is {d}x{d}",
            image.channels()
        )));
    }
    let (gx, gy) = (diff_x(image), diff_y(image));
    let (m, n, _) = image.shape();
    let mut total = 0.0;
    let mut vx = vec![0.0; d];
    let mut vy = vec![0.0; d];
    for i in 0..m {
        for j in 0..n {
            for k in 0..d {
                vx[k] = gx.get(i, j, k);
                vy[k] = gy.get(i, j, k);
            }
            let (px, py) = (basis.apply(&vx), basis.apply(&vy));
            let opp: f64 = px[..d - 1].iter().chain(&py[..d - 1]).map(|v| v * v).sum();
            let avg = px[d - 1] * px[d - 1] + py[d - 1] * py[d - 1];
            total += opp.sqrt() + alpha * avg.sqrt();
        }
    }
    Ok(total)
}

/// Saturation and value of a 3-channel vector: the distance to the gray axis
/// `mu = (1,1,1)/sqrt(3)` and the length of the projection onto it.
pub fn sat_val(g: [f64; 3]) -> (f64, f64) {
    let s = 1.0 / 3f64.sqrt();
    let proj = (g[0] + g[1] + g[2]) * s;
    let sat = g.iter().map(|v| (proj * s - v).powi(2)).sum::<f64>().sqrt();
    (sat, proj.abs())
}

/// Saturation-value total variation of a 3-channel image.
pub fn svtv_value(image: &MsiTensor, alpha: f64) -> Result<f64> {
    if image.channels() != 3 {
        return Err(Error::DimensionMismatch(format!(
            "svtv needs 3 channels, got {}",
            image.channels()
        )));
    }
    let (gx, gy) = (diff_x(image), diff_y(image));
    let (m, n, _) = image.shape();
    let mut total = 0.0;
    for i in 0..m {
        for j in 0..n {
            let (sx, vx) = sat_val([gx.get(i, j, 0), gx.get(i, j, 1), gx.get(i, j, 2)]);
            let (sy, vy) = sat_val([gy.get(i, j, 0), gy.get(i, j, 1), gy.get(i, j, 2)]);
            total += (sx * sx + sy * sy).sqrt() + alpha * (vx * vx + vy * vy).sqrt();
        }
    }
    Ok(total)
}

/// Band-by-band isotropic TV summed over channels.
pub fn tv_value(image: &MsiTensor) -> f64 {
    let (gx, gy) = (diff_x(image), diff_y(image));
    gx.as_slice()
        .iter()
        .zip(gy.as_slice())
        .map(|(a, b)| (a * a + b * b).sqrt())
        .sum()
}

fn coupled_magnitudes(image: &MsiTensor) -> Vec<f64> {
    let (gx, gy) = (diff_x(image), diff_y(image));
    let len = image.plane_len();
    let mut acc = vec![0.0; len];
    for (px, py) in gx.planes().zip(gy.planes()) {
        for ((a, x), y) in acc.iter_mut().zip(px).zip(py) {
            *a += x * x + y * y;
        }
    }
    acc.iter_mut().for_each(|a| *a = a.sqrt());
    acc
}

/// Vectorial TV: one `l2` norm per pixel over all channels and both
/// directions.
pub fn vtv_value(image: &MsiTensor) -> f64 {
    coupled_magnitudes(image).iter().sum()
}

/// Adaptive SSAHTV weights `W = G / mean(G)` with
/// `G = 1 / (1 + mu |grad V|)`.
pub fn ssahtv_weights(observed: &MsiTensor, mu: f64) -> Result<PixelWeights> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::Config(format!("mu must be positive, got {mu}")));
    }
    let g: Vec<f64> = coupled_magnitudes(observed)
        .iter()
        .map(|s| 1.0 / (1.0 + mu * s))
        .collect();
    let mean = g.iter().sum::<f64>() / g.len() as f64;
    PixelWeights::new(
        observed.rows(),
        observed.cols(),
        g.iter().map(|v| v / mean).collect(),
    )
}

/// Weighted VTV.
pub fn ssahtv_value(image: &MsiTensor, weights: &PixelWeights) -> Result<f64> {
    if weights.rows != image.rows() || weights.cols != image.cols() {
        return Err(Error::DimensionMismatch(format!(
            "weights {}x{} vs image {}x{}",
            weights.rows,
            weights.cols,
            image.rows(),
            image.cols()
        )));
    }
    Ok(coupled_magnitudes(image)
        .iter()
        .zip(&weights.values)
        .map(|(s, w)| s * w)
        .sum())
}

/// Anisotropic spectral-spatial TV: `|D_x| + |D_y| + |D_f|` over every entry.
pub fn asstv_value(image: &MsiTensor) -> f64 {
    let l1 = |t: MsiTensor| t.as_slice().iter().map(|v| v.abs()).sum::<f64>();
    l1(diff_x(image)) + l1(diff_y(image)) + l1(diff_spectral(image))
}

/// `(lambda / 2) |K * U - V|^2`.
pub fn fidelity(
    image: &MsiTensor,
    observed: &MsiTensor,
    kernel: &BlurKernel,
    lambda: f64,
) -> Result<f64> {
    image.ensure_same_shape(observed, "fidelity")?;
    let blurred = if kernel.is_delta() {
        image.clone()
    } else {
        circular_convolve(image, kernel)?
    };
    Ok(0.5 * lambda * blurred.sub(observed).norm_sq())
}

/// `F(U) = R(U) + (lambda / 2) |K * U - V|^2`.
pub fn objective(
    image: &MsiTensor,
    observed: &MsiTensor,
    kernel: &BlurKernel,
    regularizer: &Regularizer,
    lambda: f64,
) -> Result<f64> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::Config(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    Ok(regularizer.value(image)? + fidelity(image, observed, kernel, lambda)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_names_round_trip() {
        for k in ModelKind::ALL {
            assert_eq!(k.name().parse::<ModelKind>().unwrap(), k);
        }
        assert!("tgv".parse::<ModelKind>().is_err());
    }

    #[test]
    fn gottv_two_pixel_example() {
        // pixels (0,0,0) and (1,1,1): only the averaging component moves
        let u = MsiTensor::from_vec(1, 2, 3, vec![0.0, 1.0, 0.0, 1.0, 0.0, 1.0]).unwrap();
        let alpha = 0.3;
        let v = gottv_value(&u, &build_b(3).unwrap(), alpha).unwrap();
        assert!((v - alpha * 2.0 * 3f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn sat_val_examples() {
        let (s, v) = sat_val([0.5, 0.5, 0.5]);
        assert!(s.abs() < 1e-15);
        assert!((v - 0.5 * 3f64.sqrt()).abs() < 1e-15);
        let (s, v) = sat_val([1.0, -1.0, 0.0]);
        assert!((s - 2f64.sqrt()).abs() < 1e-15);
        assert!(v.abs() < 1e-15);
    }

    #[test]
    fn tv_one_by_two() {
        let u = MsiTensor::from_vec(1, 2, 1, vec![0.0, 1.0]).unwrap();
        assert!((tv_value(&u) - 2.0).abs() < 1e-15);
        assert!((vtv_value(&u) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn asstv_spectral_pixel() {
        let u = MsiTensor::from_vec(1, 1, 2, vec![0.0, 1.0]).unwrap();
        assert_eq!(asstv_value(&u), 2.0);
    }

    #[test]
    fn ssahtv_constant_weights() {
        let v = MsiTensor::filled(4, 4, 2, 0.3).unwrap();
        let w = ssahtv_weights(&v, 0.5).unwrap();
        assert!(w.values().iter().all(|x| *x == 1.0));
        assert!(ssahtv_weights(&v, 0.0).is_err());
    }

    #[test]
    fn svtv_requires_three_channels() {
        let u = MsiTensor::zeros(2, 2, 4).unwrap();
        assert!(svtv_value(&u, 1.0).is_err());
    }

    #[test]
    fn alpha_must_be_positive() {
        assert!(Regularizer::gottv(build_b(3).unwrap(), 0.0).is_err());
        assert!(Regularizer::svtv(-1.0).is_err());
    }

    #[test]
    fn objective_examples() {
        let u = MsiTensor::filled(4, 4, 3, 0.2).unwrap();
        let reg = Regularizer::Vtv;
        assert_eq!(
            objective(&u, &u, &BlurKernel::delta(), &reg, 2.0).unwrap(),
            0.0
        );
        assert!(objective(&u, &u, &BlurKernel::delta(), &reg, 0.0).is_err());
    }
}
