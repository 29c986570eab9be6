#![allow(dead_code)]

use gottv::degrade::{degrade, DegradeSpec};
use gottv::MsiTensor;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub struct Rng(ChaCha8Rng);

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    pub fn index(&mut self, n: usize) -> usize {
        (self.0.next_u64() % n as u64) as usize
    }

    pub fn tensor(&mut self, m: usize, n: usize, d: usize) -> MsiTensor {
        MsiTensor::from_fn(m, n, d, |_, _, _| self.uniform()).unwrap()
    }

    pub fn signed_tensor(&mut self, m: usize, n: usize, d: usize, scale: f64) -> MsiTensor {
        MsiTensor::from_fn(m, n, d, |_, _, _| scale * (2.0 * self.uniform() - 1.0)).unwrap()
    }
}

/// Overlapping axis-aligned squares on a gray background. Each square has
/// a random brightness and a small per-band spectral perturbation, so
/// edges are mostly in luminance.
pub fn piecewise_constant(
    m: usize,
    n: usize,
    d: usize,
    shapes: usize,
    chroma: f64,
    seed: u64,
) -> MsiTensor {
    let mut rng = Rng::new(seed);
    let squares: Vec<(f64, f64, f64, Vec<f64>)> = (0..shapes)
        .map(|_| {
            let ci = rng.range(0.0, m as f64);
            let cj = rng.range(0.0, n as f64);
            let half = rng.range(0.1, 0.3) * m.min(n) as f64;
            let lum = rng.range(0.2, 0.8);
            let spectrum = (0..d)
                .map(|_| (lum + chroma * (rng.uniform() - 0.5)).clamp(0.0, 1.0))
                .collect();
            (ci, cj, half, spectrum)
        })
        .collect();
    MsiTensor::from_fn(m, n, d, |i, j, k| {
        squares
            .iter()
            .rev()
            .find(|(ci, cj, half, _)| (i as f64 - ci).abs().max((j as f64 - cj).abs()) < *half)
            .map_or(0.5, |s| s.3[k])
    })
    .unwrap()
}

/// The 64×64×8 ordering fixture: clean image and its std-0.1 noisy copy.
pub fn ordering_fixture() -> (MsiTensor, MsiTensor) {
    let clean = piecewise_constant(64, 64, 8, 10, 0.1, 2024);
    let noisy = degrade(&clean, &DegradeSpec::noise(0.1, 8).unwrap()).unwrap();
    (clean, noisy)
}

/// The 32×32×4 basis-robustness fixture.
pub fn small_fixture() -> (MsiTensor, MsiTensor) {
    let clean = piecewise_constant(32, 32, 4, 6, 0.2, 11);
    let noisy = degrade(&clean, &DegradeSpec::noise(0.1, 3).unwrap()).unwrap();
    (clean, noisy)
}

/// Minimizes a unimodal function on `[lo, hi]` by golden-section search.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > tol {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = f(b);
        }
    }
    0.5 * (lo + hi)
}
