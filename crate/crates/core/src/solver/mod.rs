//! ADMM restoration engine.
//!
//! Every model is solved by the same loop: an FFT solve for the image
//! variable, a shrinkage step for the split gradients, a multiplier update and
//! a geometric penalty schedule. GOTTV (and SVTV, its three-channel case)
//! runs in opponent coordinates `Phi = Q U`; the other models run directly on
//! `U`. Denoising is the delta-kernel case.

mod dense;
mod phi;
mod shrink;

use std::time::Instant;

pub use dense::{dense_oracle_phi_solve, DENSE_MAX_COUPLED, DENSE_MAX_PIXELS};
pub use phi::{phi_subproblem, PhiSolution, PhiSolver, PhiWorkspace};
pub use shrink::{group_soft_threshold, soft_threshold, w_subproblem, w_subproblem_into};

use crate::diff::{diff_spectral_into, diff_x_into, diff_y_into};
use crate::error::{Error, Result};
use crate::fft::kernel_to_otf;
use crate::kernel::BlurKernel;
use crate::opponent::{build_b, inverse_transform_image, transform_image, OpponentBasis};
use crate::regularizers::Regularizer;
use crate::tensor::MsiTensor;

/// Split gradient fields `(W_x, W_y[, W_f])`, also used for multipliers.
#[derive(Debug, Clone, PartialEq)]
pub struct Splitting {
    pub x: MsiTensor,
    pub y: MsiTensor,
    /// Spectral field, present only for ASSTV.
    pub f: Option<MsiTensor>,
}

impl Splitting {
    pub fn zeros_like(image: &MsiTensor, spectral: bool) -> Self {
        Self {
            x: image.zeros_like(),
            y: image.zeros_like(),
            f: spectral.then(|| image.zeros_like()),
        }
    }

    /// Forward differences of `image`.
    pub fn gradients(image: &MsiTensor, spectral: bool) -> Self {
        let mut g = Self::zeros_like(image, spectral);
        g.assign_gradients(image);
        g
    }

    fn assign_gradients(&mut self, image: &MsiTensor) {
        diff_x_into(image, &mut self.x);
        diff_y_into(image, &mut self.y);
        if let Some(f) = self.f.as_mut() {
            diff_spectral_into(image, f);
        }
    }

    fn fields(&self) -> impl Iterator<Item = &MsiTensor> {
        [Some(&self.x), Some(&self.y), self.f.as_ref()]
            .into_iter()
            .flatten()
    }

    pub fn norm_sq(&self) -> f64 {
        self.fields().map(MsiTensor::norm_sq).sum()
    }

    fn distance_sq(&self, other: &Splitting) -> f64 {
        self.fields()
            .zip(other.fields())
            .map(|(a, b)| a.sub(b).norm_sq())
            .sum()
    }
}

/// Inputs of one Phi-subproblem, expressed in the solver's working domain.
#[derive(Debug, Clone)]
pub struct AdmmState {
    /// Observed image in the working domain (`Q V` for GOTTV).
    pub observed: MsiTensor,
    pub kernel: BlurKernel,
    pub lambda: f64,
    /// Whether the spectral difference is part of the splitting (ASSTV).
    pub coupled: bool,
    pub w: Splitting,
    pub mult: Splitting,
}

impl AdmmState {
    pub(crate) fn check(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::Config(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        for s in [&self.w, &self.mult] {
            for f in s.fields() {
                self.observed.ensure_same_shape(f, "admm state")?;
            }
            if self.coupled != s.f.is_some() {
                return Err(Error::Config(
                    "spectral field must be present exactly when coupled".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Solver hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmmConfig {
    pub lambda: f64,
    /// Initial penalty `r`.
    pub r0: f64,
    /// Penalty growth factor.
    pub rho: f64,
    pub r_max: f64,
    pub max_iter: usize,
    /// Stop when `|Phi_k - Phi_{k-1}| / |Phi_k|` drops below this.
    pub rel_tol: f64,
    /// Record `F(U_k)` every iteration.
    pub track_objective: bool,
}

impl AdmmConfig {
    pub const DEFAULT_R0: f64 = 0.01;
    pub const DEFAULT_RHO: f64 = 1.8;
    pub const DEFAULT_R_MAX: f64 = 1e6;
    pub const DEFAULT_REL_TOL: f64 = 1e-5;
    pub const DENOISE_MAX_ITER: usize = 10_000;
    pub const DEBLUR_MAX_ITER: usize = 100_000;

    pub fn denoise(lambda: f64) -> Self {
        Self {
            lambda,
            r0: Self::DEFAULT_R0,
            rho: Self::DEFAULT_RHO,
            r_max: Self::DEFAULT_R_MAX,
            max_iter: Self::DENOISE_MAX_ITER,
            rel_tol: Self::DEFAULT_REL_TOL,
            track_objective: true,
        }
    }

    pub fn deblur(lambda: f64) -> Self {
        Self {
            max_iter: Self::DEBLUR_MAX_ITER,
            ..Self::denoise(lambda)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return bad(format!("lambda must be positive, got {}", self.lambda));
        }
        if !(self.r0.is_finite() && self.r0 > 0.0 && self.r0 <= self.r_max) {
            return bad(format!(
                "need 0 < r0 <= r_max, got r0 = {}, r_max = {}",
                self.r0, self.r_max
            ));
        }
        if !(self.r_max.is_finite()) {
            return bad("r_max must be finite".into());
        }
        if !(self.rho.is_finite() && self.rho >= 1.0) {
            return bad(format!("rho must be at least 1, got {}", self.rho));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1".into());
        }
        if !(self.rel_tol.is_finite() && self.rel_tol > 0.0) {
            return bad(format!("rel_tol must be positive, got {}", self.rel_tol));
        }
        Ok(())
    }
}

/// Per-run diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// `F(U_k)` per iteration (empty when tracking is off).
    pub objective_trace: Vec<f64>,
    /// `|Phi_k - Phi_{k-1}| / |Phi_k|` per iteration.
    pub relerr_trace: Vec<f64>,
    pub final_r: f64,
    /// `|W - D Phi| / |D Phi|` at the last iterate.
    pub primal_residual: f64,
    pub converged: bool,
    pub seconds: f64,
}

impl SolveReport {
    pub fn final_relerr(&self) -> f64 {
        self.relerr_trace.last().copied().unwrap_or(f64::NAN)
    }

    pub fn final_objective(&self) -> Option<f64> {
        self.objective_trace.last().copied()
    }
}

/// Restores `observed` with ADMM starting from zero split
/// variables and multipliers.
pub fn admm_restore(
    observed: &MsiTensor,
    kernel: &BlurKernel,
    regularizer: &Regularizer,
    config: &AdmmConfig,
) -> Result<(MsiTensor, SolveReport)> {
    admm_restore_with(observed, kernel, regularizer, config, None)
}

/// As [`admm_restore`], optionally seeding the multipliers (given in the
/// solver's working domain).
pub fn admm_restore_with(
    observed: &MsiTensor,
    kernel: &BlurKernel,
    regularizer: &Regularizer,
    config: &AdmmConfig,
    initial_multipliers: Option<Splitting>,
) -> Result<(MsiTensor, SolveReport)> {
    config.validate()?;
    let start = Instant::now();
    let (m, n, d) = observed.shape();
    if !kernel.fits(m, n) {
        return Err(Error::KernelTooLarge);
    }

    // SVTV is GOTTV with the canonical three-channel basis.
    let svtv_basis;
    let (basis, working_reg): (Option<&OpponentBasis>, Regularizer) = match regularizer {
        Regularizer::Gottv { basis, .. } => (Some(basis), regularizer.clone()),
        Regularizer::Svtv { alpha } => {
            if d != 3 {
                return Err(Error::DimensionMismatch(format!(
                    "svtv needs 3 channels, got {d}"
                )));
            }
            svtv_basis = build_b(3)?;
            (
                Some(&svtv_basis),
                Regularizer::gottv(svtv_basis.clone(), *alpha)?,
            )
        }
        Regularizer::Ssahtv { weights } => {
            if weights.rows() != m || weights.cols() != n {
                return Err(Error::DimensionMismatch("ssahtv weights vs image".into()));
            }
            (None, regularizer.clone())
        }
        _ => (None, regularizer.clone()),
    };
    if let Some(b) = basis {
        if b.dim() != d {
            return Err(Error::DimensionMismatch(format!(
                "image has {d} channels, basis is {}x{}",
                b.dim(),
                b.dim()
            )));
        }
    }
    let coupled = matches!(working_reg, Regularizer::Asstv);

    let target = match basis {
        Some(b) => transform_image(observed, b)?,
        None => observed.clone(),
    };
    let otf = kernel_to_otf(kernel, m, n)?;
    let solver = PhiSolver::new(&target, otf, config.lambda, coupled)?;

    let mut w = Splitting::zeros_like(&target, coupled);
    let mut mult = match initial_multipliers {
        Some(u) => {
            for f in u.fields() {
                target.ensure_same_shape(f, "initial multipliers")?;
            }
            if u.f.is_some() != coupled {
                return Err(Error::Config(
                    "initial multipliers: spectral field mismatch".into(),
                ));
            }
            u
        }
        None => Splitting::zeros_like(&target, coupled),
    };
    let mut grads = Splitting::zeros_like(&target, coupled);

    let mut workspace = solver.workspace();
    let mut phi = target.zeros_like();
    let mut phi_prev = target.clone();
    let mut r = config.r0;
    let mut report = SolveReport::default();

    for k in 1..=config.max_iter {
        let residual_sq = solver.solve_into(&w, &mult, r, &mut workspace, &mut phi)?;
        let (phi_norm_sq, change_sq) = norm_and_distance_sq(&phi, &phi_prev);
        if !phi_norm_sq.is_finite() {
            return Err(Error::Divergence {
                iteration: k,
                what: "image iterate",
            });
        }
        grads.assign_gradients(&phi);
        w_subproblem_into(&grads, &mult, r, &working_reg, &mut w);
        let mut finite = update_multiplier(&mut mult.x, &w.x, &grads.x, r)
            & update_multiplier(&mut mult.y, &w.y, &grads.y, r);
        if let (Some(u), Some(wz), Some(gz)) = (mult.f.as_mut(), w.f.as_ref(), grads.f.as_ref()) {
            finite &= update_multiplier(u, wz, gz, r);
        }
        if !finite {
            return Err(Error::Divergence {
                iteration: k,
                what: "split variables",
            });
        }

        if config.track_objective {
            let value =
                regularizer_on_gradients(&working_reg, &grads) + 0.5 * config.lambda * residual_sq;
            report.objective_trace.push(value);
        }

        if r < config.r_max {
            r = (r * config.rho).min(config.r_max);
        }

        let (phi_norm, change) = (phi_norm_sq.sqrt(), change_sq.sqrt());
        let relerr = if phi_norm > 0.0 {
            change / phi_norm
        } else if change == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        report.relerr_trace.push(relerr);
        report.iterations = k;
        std::mem::swap(&mut phi, &mut phi_prev);
        if k > 1 && relerr < config.rel_tol {
            report.converged = true;
            break;
        }
    }

    let grad_norm = grads.norm_sq().sqrt();
    report.primal_residual = if grad_norm > 0.0 {
        w.distance_sq(&grads).sqrt() / grad_norm
    } else {
        w.norm_sq().sqrt()
    };
    report.final_r = r;

    let restored = match basis {
        Some(b) => inverse_transform_image(&phi_prev, b)?,
        None => phi_prev,
    };
    report.seconds = start.elapsed().as_secs_f64();
    Ok((restored, report))
}

/// `(|a|^2, |a - b|^2)` in one pass.
fn norm_and_distance_sq(a: &MsiTensor, b: &MsiTensor) -> (f64, f64) {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .fold((0.0, 0.0), |(n, d), (x, y)| {
            (n + x * x, d + (x - y) * (x - y))
        })
}

/// `u += r (w - g)`; false if `u` or `w` holds a non-finite entry.
fn update_multiplier(u: &mut MsiTensor, w: &MsiTensor, g: &MsiTensor, r: f64) -> bool {
    let mut finite = true;
    for ((uv, wv), gv) in u
        .as_mut_slice()
        .iter_mut()
        .zip(w.as_slice())
        .zip(g.as_slice())
    {
        *uv += r * (wv - gv);
        finite &= uv.is_finite() & wv.is_finite();
    }
    finite
}

/// Regularizer value from precomputed working-domain gradients.
fn regularizer_on_gradients(reg: &Regularizer, g: &Splitting) -> f64 {
    let (m, n, d) = g.x.shape();
    let len = m * n;
    let (xs, ys) = (g.x.as_slice(), g.y.as_slice());
    match reg {
        Regularizer::Gottv { alpha, .. } | Regularizer::Svtv { alpha } => (0..len)
            .map(|p| {
                let opp: f64 = (0..d - 1)
                    .map(|k| xs[k * len + p].powi(2) + ys[k * len + p].powi(2))
                    .sum();
                let a = (d - 1) * len + p;
                opp.sqrt() + alpha * (xs[a] * xs[a] + ys[a] * ys[a]).sqrt()
            })
            .sum(),
        Regularizer::Tv => xs.iter().zip(ys).map(|(a, b)| (a * a + b * b).sqrt()).sum(),
        Regularizer::Vtv | Regularizer::Ssahtv { .. } => (0..len)
            .map(|p| {
                let s: f64 = (0..d)
                    .map(|k| xs[k * len + p].powi(2) + ys[k * len + p].powi(2))
                    .sum();
                let w = match reg {
                    Regularizer::Ssahtv { weights } => weights.values()[p],
                    _ => 1.0,
                };
                w * s.sqrt()
            })
            .sum(),
        Regularizer::Asstv => g
            .fields()
            .map(|f| f.as_slice().iter().map(|v| v.abs()).sum::<f64>())
            .sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(AdmmConfig::denoise(1.0).validate().is_ok());
        assert!(AdmmConfig::denoise(0.0).validate().is_err());
        let mut c = AdmmConfig::denoise(1.0);
        c.rho = 0.5;
        assert!(c.validate().is_err());
        c = AdmmConfig::denoise(1.0);
        c.r0 = 2e6;
        assert!(c.validate().is_err());
        c = AdmmConfig::denoise(1.0);
        c.max_iter = 0;
        assert!(c.validate().is_err());
        assert_eq!(AdmmConfig::deblur(1.0).max_iter, 100_000);
    }

    #[test]
    fn constant_image_is_a_fixed_point() {
        let v = MsiTensor::filled(8, 8, 3, 0.4).unwrap();
        let reg = Regularizer::gottv(build_b(3).unwrap(), 0.2).unwrap();
        let (u, report) =
            admm_restore(&v, &BlurKernel::delta(), &reg, &AdmmConfig::denoise(5.0)).unwrap();
        assert!(u.max_abs_diff(&v) < 1e-6);
        assert!(report.iterations <= 3);
        assert!(report.converged);
    }

    #[test]
    fn rejects_kernel_larger_than_image() {
        let v = MsiTensor::filled(4, 4, 2, 0.4).unwrap();
        let k = BlurKernel::gaussian(1.0).unwrap();
        assert!(matches!(
            admm_restore(&v, &k, &Regularizer::Tv, &AdmmConfig::deblur(1.0)),
            Err(Error::KernelTooLarge)
        ));
    }

    #[test]
    fn svtv_needs_three_channels() {
        let v = MsiTensor::filled(4, 4, 4, 0.4).unwrap();
        let reg = Regularizer::Svtv { alpha: 1.0 };
        assert!(admm_restore(&v, &BlurKernel::delta(), &reg, &AdmmConfig::denoise(1.0)).is_err());
    }
}
