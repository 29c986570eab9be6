//! Quality metrics and display helpers.
//!
//! PSNR assumes a peak of 1. SSIM uses the usual 11×11 Gaussian window
//! (σ = 1.5), `K1 = 0.01`, `K2 = 0.03`, evaluated only where the window fits.

use crate::error::{Error, Result};
use crate::tensor::{ChannelView, MsiTensor};

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

fn check_channels(a: &ChannelView<'_>, b: &ChannelView<'_>) -> Result<()> {
    if a.rows != b.rows || a.cols != b.cols {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    Ok(())
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let (mut sum, mut carry) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        carry += if sum.abs() >= v.abs() {
            (sum - t) + v
        } else {
            (v - t) + sum
        };
        sum = t;
    }
    sum + carry
}

/// Mean squared error between two channels.
pub fn mse(reference: ChannelView<'_>, test: ChannelView<'_>) -> Result<f64> {
    check_channels(&reference, &test)?;
    let sum = compensated_sum(
        reference
            .data
            .iter()
            .zip(test.data)
            .map(|(a, b)| (a - b) * (a - b)),
    );
    Ok(sum / reference.data.len() as f64)
}

/// `10 log10(1 / MSE)`; `+inf` when the channels are identical.
pub fn psnr(reference: ChannelView<'_>, test: ChannelView<'_>) -> Result<f64> {
    let e = mse(reference, test)?;
    Ok(if e == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * e.log10()
    })
}

fn ssim_window() -> [f64; SSIM_WINDOW] {
    let mut w = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (t, v) in w.iter_mut().enumerate() {
        let x = t as f64 - c;
        *v = (-x * x / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Separable 'valid' filtering of a row-major plane.
fn filter_valid(data: &[f64], rows: usize, cols: usize, w: &[f64]) -> Vec<f64> {
    let s = w.len();
    let (or, oc) = (rows + 1 - s, cols + 1 - s);
    let mut horiz = vec![0.0; rows * oc];
    for i in 0..rows {
        let row = &data[i * cols..(i + 1) * cols];
        for j in 0..oc {
            horiz[i * oc + j] = w.iter().zip(&row[j..j + s]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; or * oc];
    for i in 0..or {
        for (t, wt) in w.iter().enumerate() {
            let src = &horiz[(i + t) * oc..(i + t + 1) * oc];
            for (o, v) in out[i * oc..(i + 1) * oc].iter_mut().zip(src) {
                *o += wt * v;
            }
        }
    }
    out
}

/// Mean structural similarity of two channels.
pub fn ssim(reference: ChannelView<'_>, test: ChannelView<'_>) -> Result<f64> {
    check_channels(&reference, &test)?;
    let (rows, cols) = (reference.rows, reference.cols);
    if rows < SSIM_WINDOW || cols < SSIM_WINDOW {
        return Err(Error::ImageTooSmall(SSIM_WINDOW));
    }
    let w = ssim_window();
    let x = reference.data;
    let y = test.data;
    let prod = |f: &dyn Fn(f64, f64) -> f64| -> Vec<f64> {
        x.iter().zip(y).map(|(&a, &b)| f(a, b)).collect()
    };
    let mx = filter_valid(x, rows, cols, &w);
    let my = filter_valid(y, rows, cols, &w);
    let mxx = filter_valid(&prod(&|a, _| a * a), rows, cols, &w);
    let myy = filter_valid(&prod(&|_, b| b * b), rows, cols, &w);
    let mxy = filter_valid(&prod(&|a, b| a * b), rows, cols, &w);
    let total: f64 = (0..mx.len())
        .map(|p| {
            let (ux, uy) = (mx[p], my[p]);
            let vx = mxx[p] - ux * ux;
            let vy = myy[p] - uy * uy;
            let cxy = mxy[p] - ux * uy;
            ((2.0 * ux * uy + SSIM_C1) * (2.0 * cxy + SSIM_C2))
                / ((ux * ux + uy * uy + SSIM_C1) * (vx + vy + SSIM_C2))
        })
        .sum();
    Ok(total / mx.len() as f64)
}

/// Per-channel PSNR and SSIM, the spectrum-by-spectrum curves.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMetrics {
    pub psnr: Vec<f64>,
    pub ssim: Vec<f64>,
}

impl ChannelMetrics {
    pub fn mpsnr(&self) -> f64 {
        mean_or_inf(&self.psnr)
    }

    pub fn mssim(&self) -> f64 {
        self.ssim.iter().sum::<f64>() / self.ssim.len() as f64
    }
}

fn mean_or_inf(values: &[f64]) -> f64 {
    if values.iter().any(|v| v.is_infinite()) {
        f64::INFINITY
    } else {
        values.iter().sum::<f64>() / values.len() as f64
    }
}

fn per_channel(
    reference: &MsiTensor,
    test: &MsiTensor,
    f: fn(ChannelView<'_>, ChannelView<'_>) -> Result<f64>,
) -> Result<Vec<f64>> {
    reference.ensure_same_shape(test, "metrics")?;
    (0..reference.channels())
        .map(|k| f(reference.channel(k), test.channel(k)))
        .collect()
}

pub fn channel_psnr(reference: &MsiTensor, test: &MsiTensor) -> Result<Vec<f64>> {
    per_channel(reference, test, psnr)
}

pub fn channel_ssim(reference: &MsiTensor, test: &MsiTensor) -> Result<Vec<f64>> {
    per_channel(reference, test, ssim)
}

pub fn channel_metrics(reference: &MsiTensor, test: &MsiTensor) -> Result<ChannelMetrics> {
    Ok(ChannelMetrics {
        psnr: channel_psnr(reference, test)?,
        ssim: channel_ssim(reference, test)?,
    })
}

/// Mean PSNR over channels; `+inf` if any channel is exact.
pub fn mpsnr(reference: &MsiTensor, test: &MsiTensor) -> Result<f64> {
    Ok(mean_or_inf(&channel_psnr(reference, test)?))
}

/// Mean SSIM over channels.
pub fn mssim(reference: &MsiTensor, test: &MsiTensor) -> Result<f64> {
    let v = channel_ssim(reference, test)?;
    Ok(v.iter().sum::<f64>() / v.len() as f64)
}

/// Per-pixel channel mean as a one-channel image.
pub fn fuse_channels(image: &MsiTensor) -> MsiTensor {
    let (m, n, d) = image.shape();
    let len = m * n;
    let mut out = vec![0.0; len];
    for plane in image.planes() {
        for (o, v) in out.iter_mut().zip(plane) {
            *o += v;
        }
    }
    out.iter_mut().for_each(|v| *v /= d as f64);
    MsiTensor::from_vec(m, n, 1, out).expect("fused shape is valid")
}

/// Extracts one-based bands `(r, g, b)` and clamps them to `[0, 1]`.
pub fn pseudo_color(image: &MsiTensor, bands: (usize, usize, usize)) -> Result<MsiTensor> {
    let d = image.channels();
    let planes = [bands.0, bands.1, bands.2]
        .into_iter()
        .map(|b| {
            if b == 0 || b > d {
                Err(Error::BandOutOfRange(b, d))
            } else {
                Ok(image
                    .channel_slice(b - 1)
                    .iter()
                    .map(|v| v.clamp(0.0, 1.0))
                    .collect::<Vec<_>>())
            }
        })
        .collect::<Result<Vec<_>>>()?;
    MsiTensor::from_planes(image.rows(), image.cols(), &planes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psnr_anchors() {
        let z = MsiTensor::zeros(4, 4, 1).unwrap();
        let a = MsiTensor::filled(4, 4, 1, 0.1).unwrap();
        let b = MsiTensor::filled(4, 4, 1, 0.5).unwrap();
        assert!((psnr(z.channel(0), a.channel(0)).unwrap() - 20.0).abs() < 1e-12);
        assert!((psnr(z.channel(0), b.channel(0)).unwrap() - 10.0 * 4f64.log10()).abs() < 1e-12);
        assert_eq!(psnr(a.channel(0), a.channel(0)).unwrap(), f64::INFINITY);
    }

    #[test]
    fn ssim_identity_and_constant() {
        let x =
            MsiTensor::from_fn(16, 16, 1, |i, j, _| ((i * 7 + j * 3) % 11) as f64 / 10.0).unwrap();
        assert!((ssim(x.channel(0), x.channel(0)).unwrap() - 1.0).abs() < 1e-12);
        let c = MsiTensor::filled(12, 12, 1, 0.5).unwrap();
        assert!((ssim(c.channel(0), c.channel(0)).unwrap() - 1.0).abs() < 1e-12);
        let inv = x.map(|v| 1.0 - v);
        assert!(ssim(x.channel(0), inv.channel(0)).unwrap() < 1.0);
        let small = MsiTensor::zeros(10, 12, 1).unwrap();
        assert!(matches!(
            ssim(small.channel(0), small.channel(0)),
            Err(Error::ImageTooSmall(11))
        ));
    }

    #[test]
    fn mpsnr_is_channel_mean() {
        let reference = MsiTensor::zeros(4, 4, 2).unwrap();
        let e20 = 0.1;
        let e30 = 10f64.powf(-1.5);
        let test = MsiTensor::from_fn(4, 4, 2, |_, _, k| if k == 0 { e20 } else { e30 }).unwrap();
        assert!((mpsnr(&reference, &test).unwrap() - 25.0).abs() < 1e-9);
    }

    #[test]
    fn fuse_and_pseudo_color() {
        let x = MsiTensor::from_fn(3, 3, 2, |_, _, k| if k == 0 { 0.2 } else { 0.4 }).unwrap();
        let f = fuse_channels(&x);
        assert!(f.as_slice().iter().all(|v| (v - 0.3).abs() < 1e-15));
        let y = MsiTensor::filled(2, 2, 3, 1.2).unwrap();
        let p = pseudo_color(&y, (1, 2, 3)).unwrap();
        assert!(p.as_slice().iter().all(|&v| v == 1.0));
        assert!(matches!(
            pseudo_color(&y, (0, 1, 1)),
            Err(Error::BandOutOfRange(0, 3))
        ));
        assert!(pseudo_color(&y, (1, 1, 4)).is_err());
    }
}
