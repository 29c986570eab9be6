//! Synthetic degradation: periodic blur followed by seeded Gaussian noise.
//!
//! Noise comes from ChaCha20 (`rand_chacha`, seeded with `seed_from_u64`)
//! through the Box–Muller transform. Each pair of 64-bit draws yields two
//! normals, consumed in channel-planar order. Outputs are not clipped.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::fft::circular_convolve;
use crate::kernel::BlurKernel;
use crate::tensor::MsiTensor;

pub use crate::kernel::gaussian_kernel;

/// Blur, noise level and seed of one degradation.
#[derive(Debug, Clone, PartialEq)]
pub struct DegradeSpec {
    pub kernel: BlurKernel,
    pub noise_std: f64,
    pub seed: u64,
}

impl DegradeSpec {
    pub fn new(kernel: BlurKernel, noise_std: f64, seed: u64) -> Result<Self> {
        if !(noise_std.is_finite() && noise_std >= 0.0) {
            return Err(Error::Config(format!(
                "noise std must be nonnegative, got {noise_std}"
            )));
        }
        Ok(Self {
            kernel,
            noise_std,
            seed,
        })
    }

    /// Pure additive noise.
    pub fn noise(noise_std: f64, seed: u64) -> Result<Self> {
        Self::new(BlurKernel::delta(), noise_std, seed)
    }

    /// Kernel from a blur width, with `sigma == 0` meaning no blur.
    pub fn with_sigma(sigma: f64, noise_std: f64, seed: u64) -> Result<Self> {
        let kernel = if sigma == 0.0 {
            BlurKernel::delta()
        } else {
            gaussian_kernel(sigma)?
        };
        Self::new(kernel, noise_std, seed)
    }
}

/// Stream of standard normal samples.
#[derive(Debug, Clone)]
pub struct GaussianStream {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha20Rng::seed_from_u64(seed),
            spare: None,
        }
    }

    fn uniform(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn sample(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = 1.0 - self.uniform();
        let u2 = self.uniform();
        let radius = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(radius * s);
        radius * c
    }
}

/// Blurs `clean` periodically and adds i.i.d. `N(0, noise_std²)` noise.
pub fn degrade(clean: &MsiTensor, spec: &DegradeSpec) -> Result<MsiTensor> {
    if !(spec.noise_std.is_finite() && spec.noise_std >= 0.0) {
        return Err(Error::Config(format!(
            "noise std must be nonnegative, got {}",
            spec.noise_std
        )));
    }
    let mut out = if spec.kernel.is_delta() {
        clean.clone()
    } else {
        circular_convolve(clean, &spec.kernel)?
    };
    if spec.noise_std > 0.0 {
        let mut noise = GaussianStream::new(spec.seed);
        for v in out.as_mut_slice() {
            *v += spec.noise_std * noise.sample();
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_without_blur_or_noise() {
        let x = MsiTensor::from_fn(5, 6, 2, |i, j, k| (i + 2 * j + k) as f64 * 0.1).unwrap();
        let y = degrade(&x, &DegradeSpec::noise(0.0, 3).unwrap()).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn seed_determines_output() {
        let x = MsiTensor::filled(8, 8, 2, 0.5).unwrap();
        let a = degrade(&x, &DegradeSpec::noise(0.1, 7).unwrap()).unwrap();
        let b = degrade(&x, &DegradeSpec::noise(0.1, 7).unwrap()).unwrap();
        let c = degrade(&x, &DegradeSpec::noise(0.1, 8).unwrap()).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_negative_std() {
        assert!(DegradeSpec::noise(-0.1, 0).is_err());
    }
}
