//! Cached 2-D FFT plans, optical transfer functions and circular convolution.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::kernel::BlurKernel;
use crate::tensor::MsiTensor;

/// Forward and inverse 2-D transforms for one `rows x cols` grid.
///
/// The inverse is normalized so `inverse(forward(x)) == x`.
pub struct Fft2 {
    rows: usize,
    cols: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish()
    }
}

type PlanCache = Mutex<HashMap<(usize, usize), Arc<Fft2>>>;

static PLANS: OnceLock<PlanCache> = OnceLock::new();

impl Fft2 {
    /// Returns the cached plan for `rows x cols`, building it on first use.
    pub fn plan(rows: usize, cols: usize) -> Arc<Fft2> {
        let cache = PLANS.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().unwrap_or_else(|e| e.into_inner());
        guard
            .entry((rows, cols))
            .or_insert_with(|| {
                let mut planner = FftPlanner::<f64>::new();
                Arc::new(Fft2 {
                    rows,
                    cols,
                    row_fwd: planner.plan_fft_forward(cols),
                    row_inv: planner.plan_fft_inverse(cols),
                    col_fwd: planner.plan_fft_forward(rows),
                    col_inv: planner.plan_fft_inverse(rows),
                })
            })
            .clone()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.row_fwd, &self.col_fwd);
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.run(buf, &self.row_inv, &self.col_inv);
        let scale = 1.0 / (self.rows * self.cols) as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
    }

    fn run(&self, buf: &mut [Complex64], row: &Arc<dyn Fft<f64>>, col: &Arc<dyn Fft<f64>>) {
        assert_eq!(buf.len(), self.rows * self.cols);
        row.process(buf);
        if self.rows > 1 {
            column_pass(buf, self.rows, self.cols, col.as_ref());
        }
    }

    /// Spectrum of a real plane.
    pub fn forward_real(&self, plane: &[f64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); plane.len()];
        self.forward_real_into(plane, &mut buf);
        buf
    }

    pub fn forward_real_into(&self, plane: &[f64], buf: &mut [Complex64]) {
        for (b, &v) in buf.iter_mut().zip(plane) {
            *b = Complex64::new(v, 0.0);
        }
        self.forward(buf);
    }

    /// Inverse transform, keeping the real part.
    pub fn inverse_real(&self, mut spectrum: Vec<Complex64>, out: &mut [f64]) {
        self.inverse_real_in_place(&mut spectrum, out);
    }

    /// As [`Fft2::inverse_real`], overwriting `spectrum`.
    pub fn inverse_real_in_place(&self, spectrum: &mut [Complex64], out: &mut [f64]) {
        self.inverse(spectrum);
        for (o, c) in out.iter_mut().zip(spectrum.iter()) {
            *o = c.re;
        }
    }
}

/// Column transforms on a row-major grid, a few columns at a time through a
/// small contiguous buffer.
fn column_pass(buf: &mut [Complex64], rows: usize, cols: usize, fft: &dyn Fft<f64>) {
    const BLOCK: usize = 8;
    let zero = Complex64::new(0.0, 0.0);
    let mut block = vec![zero; BLOCK * rows];
    let mut scratch = vec![zero; fft.get_inplace_scratch_len()];
    for j0 in (0..cols).step_by(BLOCK) {
        let w = BLOCK.min(cols - j0);
        for i in 0..rows {
            let src = &buf[i * cols + j0..i * cols + j0 + w];
            for (k, v) in src.iter().enumerate() {
                block[k * rows + i] = *v;
            }
        }
        fft.process_with_scratch(&mut block[..w * rows], &mut scratch);
        for i in 0..rows {
            let dst = &mut buf[i * cols + j0..i * cols + j0 + w];
            for (k, v) in dst.iter_mut().enumerate() {
                *v = block[k * rows + i];
            }
        }
    }
}

/// Frequency response of a kernel on an `rows x cols` periodic grid.
#[derive(Debug, Clone)]
pub struct Otf {
    rows: usize,
    cols: usize,
    spectrum: Vec<Complex64>,
}

impl Otf {
    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn spectrum(&self) -> &[Complex64] {
        &self.spectrum
    }

    /// All-ones response (identity operator).
    pub fn identity(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            spectrum: vec![Complex64::new(1.0, 0.0); rows * cols],
        }
    }

    /// `|K(w)|^2` per frequency.
    pub fn power(&self) -> Vec<f64> {
        self.spectrum.iter().map(|c| c.norm_sqr()).collect()
    }

    /// Channel-wise `K * image`.
    pub fn apply(&self, image: &MsiTensor) -> Result<MsiTensor> {
        self.filter(image, false)
    }

    /// Channel-wise `K^T * image` (correlation with the kernel).
    pub fn apply_adjoint(&self, image: &MsiTensor) -> Result<MsiTensor> {
        self.filter(image, true)
    }

    fn filter(&self, image: &MsiTensor, adjoint: bool) -> Result<MsiTensor> {
        if image.rows() != self.rows || image.cols() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "otf {}x{} vs image {}x{}",
                self.rows,
                self.cols,
                image.rows(),
                image.cols()
            )));
        }
        let plan = Fft2::plan(self.rows, self.cols);
        let mut out = image.zeros_like();
        let len = image.plane_len();
        out.as_mut_slice()
            .par_chunks_mut(len)
            .zip(image.as_slice().par_chunks(len))
            .for_each(|(dst, src)| {
                let mut spec = plan.forward_real(src);
                for (s, k) in spec.iter_mut().zip(&self.spectrum) {
                    *s *= if adjoint { k.conj() } else { *k };
                }
                plan.inverse_real(spec, dst);
            });
        Ok(out)
    }
}

/// Embeds `kernel` in an `m x n` periodic grid with its center at `(0, 0)`
/// (negative offsets wrap to the far edges) and transforms it.
pub fn kernel_to_otf(kernel: &BlurKernel, m: usize, n: usize) -> Result<Otf> {
    if !kernel.fits(m, n) {
        return Err(Error::KernelTooLarge);
    }
    let grid = embed_kernel(kernel, m, n);
    let plan = Fft2::plan(m, n);
    Ok(Otf {
        rows: m,
        cols: n,
        spectrum: plan.forward_real(&grid),
    })
}

/// The wrapped `m x n` point-spread array used by [`kernel_to_otf`].
pub fn embed_kernel(kernel: &BlurKernel, m: usize, n: usize) -> Vec<f64> {
    let (ca, cb) = kernel.center();
    let mut grid = vec![0.0; m * n];
    for a in 0..kernel.rows() {
        for b in 0..kernel.cols() {
            let i = (a + m - ca) % m;
            let j = (b + n - cb) % n;
            grid[i * n + j] += kernel.get(a, b);
        }
    }
    grid
}

/// Channel-wise periodic convolution `K * U` computed through the kernel's OTF.
pub fn circular_convolve(image: &MsiTensor, kernel: &BlurKernel) -> Result<MsiTensor> {
    let otf = kernel_to_otf(kernel, image.rows(), image.cols())?;
    otf.apply(image)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_otf_is_all_ones() {
        let otf = kernel_to_otf(&BlurKernel::delta(), 4, 6).unwrap();
        for c in otf.spectrum() {
            assert!((c - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn dc_equals_coefficient_sum() {
        let k = BlurKernel::gaussian(0.8).unwrap();
        let otf = kernel_to_otf(&k, 9, 9).unwrap();
        assert!((otf.spectrum()[0].re - 1.0).abs() < 1e-12);
        assert!(otf.spectrum()[0].im.abs() < 1e-12);
    }

    #[test]
    fn kernel_larger_than_image() {
        let k = BlurKernel::gaussian(1.0).unwrap();
        let u = MsiTensor::zeros(5, 8, 1).unwrap();
        assert!(matches!(
            circular_convolve(&u, &k),
            Err(Error::KernelTooLarge)
        ));
    }

    #[test]
    fn constant_image_is_preserved() {
        let k = BlurKernel::new(3, 3, (1..=9).map(f64::from).collect()).unwrap();
        let u = MsiTensor::filled(6, 5, 2, 0.25).unwrap();
        let v = circular_convolve(&u, &k).unwrap();
        assert!(v.max_abs_diff(&u) < 1e-14);
    }

    #[test]
    fn round_trip_single_row_and_column() {
        for (m, n) in [(1, 7), (7, 1), (5, 6)] {
            let plan = Fft2::plan(m, n);
            let x: Vec<f64> = (0..m * n).map(|v| (v as f64).sin()).collect();
            let spec = plan.forward_real(&x);
            let mut back = vec![0.0; m * n];
            plan.inverse_real(spec, &mut back);
            for (a, b) in x.iter().zip(&back) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
