//! Spatial blur kernels.

use crate::error::{Error, Result};

/// A normalized, nonnegative convolution kernel.
///
/// The kernel's center is element `(rows / 2, cols / 2)`: the middle element
/// for odd extents and the lower-right of the central four for even ones.
#[derive(Debug, Clone, PartialEq)]
pub struct BlurKernel {
    rows: usize,
    cols: usize,
    coeffs: Vec<f64>,
    sigma: Option<f64>,
}

impl BlurKernel {
    /// Normalizes `coeffs` to unit sum. Coefficients must be finite and
    /// nonnegative with a positive sum.
    pub fn new(rows: usize, cols: usize, coeffs: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || coeffs.len() != rows * cols {
            return Err(Error::InvalidKernel(format!(
                "{rows}x{cols} kernel with {} coefficients",
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::InvalidKernel(
                "coefficients must be finite and nonnegative".into(),
            ));
        }
        let sum: f64 = coeffs.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidKernel("coefficients sum to zero".into()));
        }
        Ok(Self {
            rows,
            cols,
            coeffs: coeffs.into_iter().map(|c| c / sum).collect(),
            sigma: None,
        })
    }

    /// The identity kernel.
    pub fn delta() -> Self {
        Self {
            rows: 1,
            cols: 1,
            coeffs: vec![1.0],
            sigma: None,
        }
    }

    /// Isotropic Gaussian truncated at radius `ceil(3 sigma)`, so the side is
    /// `2 * ceil(3 sigma) + 1`.
    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidKernel(format!(
                "sigma must be positive, got {sigma}"
            )));
        }
        let radius = (3.0 * sigma).ceil() as isize;
        let side = (2 * radius + 1) as usize;
        let two_s2 = 2.0 * sigma * sigma;
        let mut coeffs = Vec::with_capacity(side * side);
        for y in -radius..=radius {
            for x in -radius..=radius {
                coeffs.push((-((x * x + y * y) as f64) / two_s2).exp());
            }
        }
        let mut k = Self::new(side, side, coeffs)?;
        k.sigma = Some(sigma);
        Ok(k)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }
    pub fn cols(&self) -> usize {
        self.cols
    }
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
    pub fn sigma(&self) -> Option<f64> {
        self.sigma
    }
    pub fn center(&self) -> (usize, usize) {
        (self.rows / 2, self.cols / 2)
    }
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.coeffs[a * self.cols + b]
    }
    pub fn is_delta(&self) -> bool {
        self.coeffs.len() == 1
    }

    pub fn fits(&self, m: usize, n: usize) -> bool {
        self.rows <= m && self.cols <= n
    }
}

/// Gaussian blur kernel with standard deviation `sigma`.
pub fn gaussian_kernel(sigma: f64) -> Result<BlurKernel> {
    BlurKernel::gaussian(sigma)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_sizes() {
        let k1 = gaussian_kernel(1.0).unwrap();
        assert_eq!((k1.rows(), k1.cols()), (7, 7));
        assert!((k1.coeffs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let k15 = gaussian_kernel(1.5).unwrap();
        assert_eq!((k15.rows(), k15.cols()), (11, 11));
    }

    #[test]
    fn gaussian_symmetry_and_peak() {
        let k = gaussian_kernel(1.3).unwrap();
        let s = k.rows();
        let (c, _) = k.center();
        let peak = k.get(c, c);
        for a in 0..s {
            for b in 0..s {
                let v = k.get(a, b);
                assert!(v <= peak);
                assert_eq!(v, k.get(s - 1 - a, b));
                assert_eq!(v, k.get(a, s - 1 - b));
                assert_eq!(v, k.get(b, a));
            }
        }
    }

    #[test]
    fn rejects_bad_kernels() {
        assert!(BlurKernel::new(2, 2, vec![1.0, -1.0, 0.5, 0.5]).is_err());
        assert!(BlurKernel::new(1, 2, vec![0.0, 0.0]).is_err());
        assert!(gaussian_kernel(0.0).is_err());
    }

    #[test]
    fn even_kernel_center() {
        let k = BlurKernel::new(4, 4, vec![1.0; 16]).unwrap();
        assert_eq!(k.center(), (2, 2));
    }
}
