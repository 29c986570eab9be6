//! FFT solver for the Phi-subproblem
//! `(lambda K^T K + r D^T D) Phi = lambda K^T V + D^T (r W + Upsilon)`.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::diff::{
    add_adjoint_diff_spectral, add_adjoint_diff_x, add_adjoint_diff_x_plane, add_adjoint_diff_y,
    add_adjoint_diff_y_plane,
};
use crate::error::{Error, Result};
use crate::fft::{kernel_to_otf, Fft2, Otf};
use crate::tensor::MsiTensor;

use super::{AdmmState, Splitting};

const SINGULAR_TOL: f64 = 1e-14;

/// Precomputed spectra for repeated Phi-subproblem solves on one problem.
pub struct PhiSolver {
    rows: usize,
    cols: usize,
    channels: usize,
    lambda: f64,
    coupled: bool,
    plan: Arc<Fft2>,
    otf: Otf,
    /// `|K|^2` per frequency.
    otf_power: Vec<f64>,
    /// `|D_x|^2 + |D_y|^2` per frequency.
    spatial_symbol: Vec<f64>,
    /// `|D_f|^2` per spectral frequency.
    spectral_symbol: Vec<f64>,
    /// Per-channel spectra of the observed image.
    observed_hat: Vec<Vec<Complex64>>,
    spectral_fwd: Option<Arc<dyn Fft<f64>>>,
    spectral_inv: Option<Arc<dyn Fft<f64>>>,
}

/// Scratch buffers for repeated solves.
pub struct PhiWorkspace {
    rhs: MsiTensor,
    combined: MsiTensor,
    spectra: Vec<Vec<Complex64>>,
}

/// Result of one solve: the new iterate and its data-fidelity residual
/// `|K * Phi - V|^2`.
pub struct PhiSolution {
    pub phi: MsiTensor,
    pub residual_sq: f64,
}

impl PhiSolver {
    pub fn new(observed: &MsiTensor, otf: Otf, lambda: f64, coupled: bool) -> Result<Self> {
        let (m, n, d) = observed.shape();
        if otf.rows() != m || otf.cols() != n {
            return Err(Error::DimensionMismatch(
                "otf grid vs observed image".into(),
            ));
        }
        let plan = Fft2::plan(m, n);
        let otf_power = otf.power();
        let mut spatial_symbol = vec![0.0; m * n];
        for k in 0..m {
            let sy = 2.0 - 2.0 * (2.0 * PI * k as f64 / m as f64).cos();
            for l in 0..n {
                let sx = 2.0 - 2.0 * (2.0 * PI * l as f64 / n as f64).cos();
                spatial_symbol[k * n + l] = sx + sy;
            }
        }
        let spectral_symbol = (0..d)
            .map(|p| 2.0 - 2.0 * (2.0 * PI * p as f64 / d as f64).cos())
            .collect();
        let observed_hat = observed
            .planes()
            .collect::<Vec<_>>()
            .par_iter()
            .map(|p| plan.forward_real(p))
            .collect();
        let (spectral_fwd, spectral_inv) = if coupled {
            let mut planner = FftPlanner::<f64>::new();
            (
                Some(planner.plan_fft_forward(d)),
                Some(planner.plan_fft_inverse(d)),
            )
        } else {
            (None, None)
        };
        Ok(Self {
            rows: m,
            cols: n,
            channels: d,
            lambda,
            coupled,
            plan,
            otf,
            otf_power,
            spatial_symbol,
            spectral_symbol,
            observed_hat,
            spectral_fwd,
            spectral_inv,
        })
    }

    /// Assembles `D^T (r W + Upsilon)` in the spatial domain.
    fn penalty_rhs(&self, w: &Splitting, mult: &Splitting, r: f64, ws: &mut PhiWorkspace) {
        let PhiWorkspace { rhs, combined, .. } = ws;
        rhs.as_mut_slice().iter_mut().for_each(|v| *v = 0.0);
        combined.assign_axpy(&mult.x, r, &w.x);
        add_adjoint_diff_x(combined, 1.0, rhs);
        combined.assign_axpy(&mult.y, r, &w.y);
        add_adjoint_diff_y(combined, 1.0, rhs);
        if let (Some(wf), Some(uf)) = (&w.f, &mult.f) {
            combined.assign_axpy(uf, r, wf);
            add_adjoint_diff_spectral(combined, 1.0, rhs);
        }
    }

    /// Channels decouple without the spectral term: each one is assembled,
    /// transformed, divided and transformed back while it is cache-resident.
    fn solve_uncoupled(
        &self,
        w: &Splitting,
        mult: &Splitting,
        r: f64,
        ws: &mut PhiWorkspace,
        phi: &mut MsiTensor,
    ) -> Result<f64> {
        let (m, n) = (self.rows, self.cols);
        let len = m * n;
        let lambda = self.lambda;
        let k_hat = self.otf.spectrum();
        let per_channel: Vec<(f64, f64)> = ws
            .spectra
            .par_iter_mut()
            .zip(ws.rhs.as_mut_slice().par_chunks_mut(len))
            .zip(phi.as_mut_slice().par_chunks_mut(len))
            .enumerate()
            .map(|(k, ((spec, rhs), out))| {
                rhs.iter_mut().for_each(|v| *v = 0.0);
                add_adjoint_diff_x_plane(w.x.channel_slice(k), r, rhs, m, n);
                add_adjoint_diff_x_plane(mult.x.channel_slice(k), 1.0, rhs, m, n);
                add_adjoint_diff_y_plane(w.y.channel_slice(k), r, rhs, m, n);
                add_adjoint_diff_y_plane(mult.y.channel_slice(k), 1.0, rhs, m, n);
                self.plan.forward_real_into(rhs, spec);
                let v_hat = &self.observed_hat[k];
                let mut min_denom = f64::INFINITY;
                let mut residual = 0.0;
                for f in 0..len {
                    let denom = lambda * self.otf_power[f] + r * self.spatial_symbol[f];
                    min_denom = min_denom.min(denom);
                    let s = (spec[f] + lambda * k_hat[f].conj() * v_hat[f]) / denom;
                    residual += (k_hat[f] * s - v_hat[f]).norm_sqr();
                    spec[f] = s;
                }
                self.plan.inverse_real_in_place(spec, out);
                (residual, min_denom)
            })
            .collect();
        if !per_channel.iter().all(|&(_, d)| d >= SINGULAR_TOL) {
            return Err(Error::SingularSystem);
        }
        Ok(per_channel.iter().map(|&(res, _)| res).sum::<f64>() / len as f64)
    }

    /// Buffers sized for this solver, reusable across [`PhiSolver::solve_into`] calls.
    pub fn workspace(&self) -> PhiWorkspace {
        let len = self.rows * self.cols;
        let zeros = MsiTensor::zeros(self.rows, self.cols, self.channels)
            .expect("solver dimensions are valid");
        PhiWorkspace {
            rhs: zeros.clone(),
            combined: zeros,
            spectra: vec![vec![Complex64::new(0.0, 0.0); len]; self.channels],
        }
    }

    pub fn solve(&self, w: &Splitting, mult: &Splitting, r: f64) -> Result<PhiSolution> {
        let mut ws = self.workspace();
        let mut phi = ws.rhs.zeros_like();
        let residual_sq = self.solve_into(w, mult, r, &mut ws, &mut phi)?;
        Ok(PhiSolution { phi, residual_sq })
    }

    /// Writes the minimizer into `phi` and returns `|K * Phi - V|^2`.
    pub fn solve_into(
        &self,
        w: &Splitting,
        mult: &Splitting,
        r: f64,
        ws: &mut PhiWorkspace,
        phi: &mut MsiTensor,
    ) -> Result<f64> {
        if !self.coupled {
            return self.solve_uncoupled(w, mult, r, ws, phi);
        }
        self.penalty_rhs(w, mult, r, ws);
        let len = self.rows * self.cols;
        let lambda = self.lambda;
        let k_hat = self.otf.spectrum();

        // Fourier transform of the full right-hand side, per channel.
        ws.spectra
            .par_iter_mut()
            .zip(ws.rhs.as_slice().par_chunks(len))
            .zip(self.observed_hat.par_iter())
            .for_each(|((s, plane), v_hat)| {
                self.plan.forward_real_into(plane, s);
                for ((sv, kv), vv) in s.iter_mut().zip(k_hat).zip(v_hat) {
                    *sv += lambda * kv.conj() * vv;
                }
            });
        let spectra = &mut ws.spectra;

        self.divide_coupled(spectra, r)?;

        let residual_sq: f64 = spectra
            .iter()
            .zip(&self.observed_hat)
            .map(|(s, v)| {
                s.iter()
                    .zip(k_hat)
                    .zip(v)
                    .map(|((sv, kv), vv)| (kv * sv - vv).norm_sqr())
                    .sum::<f64>()
            })
            .sum::<f64>()
            / len as f64;

        phi.as_mut_slice()
            .par_chunks_mut(len)
            .zip(spectra.par_iter_mut())
            .for_each(|(dst, s)| self.plan.inverse_real_in_place(s, dst));
        Ok(residual_sq)
    }

    /// Spectral-axis transform, division, inverse spectral transform.
    fn divide_coupled(&self, spectra: &mut [Vec<Complex64>], r: f64) -> Result<()> {
        let d = self.channels;
        let fwd = self.spectral_fwd.as_ref().expect("coupled plan");
        let inv = self.spectral_inv.as_ref().expect("coupled plan");
        let mut line = vec![Complex64::new(0.0, 0.0); d];
        let mut min_denom = f64::INFINITY;
        for f in 0..self.rows * self.cols {
            for (k, s) in spectra.iter().enumerate() {
                line[k] = s[f];
            }
            fwd.process(&mut line);
            let base = self.lambda * self.otf_power[f] + r * self.spatial_symbol[f];
            for (p, v) in line.iter_mut().enumerate() {
                let denom = base + r * self.spectral_symbol[p];
                min_denom = min_denom.min(denom);
                *v /= denom;
            }
            inv.process(&mut line);
            for (k, s) in spectra.iter_mut().enumerate() {
                s[f] = line[k] / d as f64;
            }
        }
        if min_denom.is_nan() || min_denom < SINGULAR_TOL {
            return Err(Error::SingularSystem);
        }
        Ok(())
    }
}

/// One Phi-subproblem solve for an explicit state.
pub fn phi_subproblem(state: &AdmmState, r: f64) -> Result<MsiTensor> {
    state.check()?;
    let otf = kernel_to_otf(&state.kernel, state.observed.rows(), state.observed.cols())?;
    let solver = PhiSolver::new(&state.observed, otf, state.lambda, state.coupled)?;
    Ok(solver.solve(&state.w, &state.mult, r)?.phi)
}
