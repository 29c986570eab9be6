//! Dense normal-equation solve used to check the FFT path on small grids.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::tensor::MsiTensor;

use super::AdmmState;

/// Largest `m * n` accepted by the dense oracle.
pub const DENSE_MAX_PIXELS: usize = 256;
/// Largest `m * n * d` for the channel-coupled (ASSTV) system.
pub const DENSE_MAX_COUPLED: usize = 1024;

/// Assembles `lambda K^T K + r D^T D` and the right-hand side explicitly
/// from the kernel coefficients and difference stencils, then solves by LU.
pub fn dense_oracle_phi_solve(state: &AdmmState, r: f64) -> Result<MsiTensor> {
    state.check()?;
    let (m, n, d) = state.observed.shape();
    let mn = m * n;
    if mn > DENSE_MAX_PIXELS {
        return Err(Error::OracleTooLarge(format!(
            "{m}x{n} exceeds {DENSE_MAX_PIXELS} pixels"
        )));
    }
    if state.coupled && mn * d > DENSE_MAX_COUPLED {
        return Err(Error::OracleTooLarge(format!(
            "{m}x{n}x{d} exceeds {DENSE_MAX_COUPLED} unknowns"
        )));
    }
    if !state.kernel.fits(m, n) {
        return Err(Error::KernelTooLarge);
    }

    let blur = blur_matrix(state, m, n);
    let dx = stencil(mn, |p| {
        let (i, j) = (p / n, p % n);
        i * n + (j + 1) % n
    });
    let dy = stencil(mn, |p| {
        let (i, j) = (p / n, p % n);
        ((i + 1) % m) * n + j
    });

    let plane = |t: &MsiTensor, k: usize| DVector::from_column_slice(t.channel_slice(k));
    let combine = |wz: &MsiTensor, uz: &MsiTensor, k: usize| plane(wz, k) * r + plane(uz, k);

    let mut out = state.observed.zeros_like();
    if state.coupled {
        let size = mn * d;
        let block = |mat: &DMatrix<f64>| {
            let mut big = DMatrix::<f64>::zeros(size, size);
            for k in 0..d {
                big.view_mut((k * mn, k * mn), (mn, mn)).copy_from(mat);
            }
            big
        };
        let kb = block(&blur);
        let dxb = block(&dx);
        let dyb = block(&dy);
        let df = stencil(size, |q| {
            let (k, p) = (q / mn, q % mn);
            ((k + 1) % d) * mn + p
        });
        let a = kb.transpose() * &kb * state.lambda
            + (dxb.transpose() * &dxb + dyb.transpose() * &dyb + df.transpose() * &df) * r;
        let stack = |t: &MsiTensor| DVector::from_column_slice(t.as_slice());
        let stack_comb = |wz: &MsiTensor, uz: &MsiTensor| stack(wz) * r + stack(uz);
        let mut b = kb.transpose() * stack(&state.observed) * state.lambda
            + dxb.transpose() * stack_comb(&state.w.x, &state.mult.x)
            + dyb.transpose() * stack_comb(&state.w.y, &state.mult.y);
        if let (Some(wf), Some(uf)) = (&state.w.f, &state.mult.f) {
            b += df.transpose() * stack_comb(wf, uf);
        }
        let x = solve(a, &b)?;
        out.as_mut_slice().copy_from_slice(x.as_slice());
    } else {
        let a = blur.transpose() * &blur * state.lambda
            + (dx.transpose() * &dx + dy.transpose() * &dy) * r;
        let lu = a.lu();
        for k in 0..d {
            let b = blur.transpose() * plane(&state.observed, k) * state.lambda
                + dx.transpose() * combine(&state.w.x, &state.mult.x, k)
                + dy.transpose() * combine(&state.w.y, &state.mult.y, k);
            let x = lu.solve(&b).ok_or(Error::SingularSystem)?;
            out.channel_slice_mut(k).copy_from_slice(x.as_slice());
        }
    }
    Ok(out)
}

fn solve(a: DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    a.lu().solve(b).ok_or(Error::SingularSystem)
}

/// Row `p` of the blur matrix: `(K U)(i,j) = sum_ab k(a,b) U(i - (a - ca), j - (b - cb))`.
fn blur_matrix(state: &AdmmState, m: usize, n: usize) -> DMatrix<f64> {
    let kernel = &state.kernel;
    let (ca, cb) = kernel.center();
    let mn = m * n;
    let mut mat = DMatrix::<f64>::zeros(mn, mn);
    for i in 0..m {
        for j in 0..n {
            for a in 0..kernel.rows() {
                for b in 0..kernel.cols() {
                    let si = (i + m * kernel.rows() + ca - a) % m;
                    let sj = (j + n * kernel.cols() + cb - b) % n;
                    mat[(i * n + j, si * n + sj)] += kernel.get(a, b);
                }
            }
        }
    }
    mat
}

/// Forward-difference matrix: `-1` on the diagonal, `+1` at `next(p)`.
fn stencil(size: usize, next: impl Fn(usize) -> usize) -> DMatrix<f64> {
    let mut mat = DMatrix::<f64>::zeros(size, size);
    for p in 0..size {
        mat[(p, p)] -= 1.0;
        mat[(p, next(p))] += 1.0;
    }
    mat
}
