//! Proximal maps for the W-subproblem.

use crate::regularizers::Regularizer;

use super::Splitting;

/// Group soft-thresholding: `max(1 - t/|v|, 0) v`, in place.
pub fn group_soft_threshold(v: &mut [f64], threshold: f64) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm <= threshold {
        v.iter_mut().for_each(|x| *x = 0.0);
    } else {
        let scale = 1.0 - threshold / norm;
        v.iter_mut().for_each(|x| *x *= scale);
    }
}

/// Scalar soft-thresholding.
#[inline]
pub fn soft_threshold(x: f64, threshold: f64) -> f64 {
    if x > threshold {
        x - threshold
    } else if x < -threshold {
        x + threshold
    } else {
        0.0
    }
}

/// Minimizes the augmented Lagrangian over the split variables.
///
/// With target `T = D Phi - Upsilon / r`, each regularizer's groups are
/// shrunk towards zero: GOTTV/SVTV shrink the `2(d-1)` opponent components
/// by `1/r` and the averaging pair by `alpha/r`; TV shrinks each channel's
/// gradient pair; VTV and SSAHTV shrink the full `2d` vector (SSAHTV with a
/// per-pixel threshold); ASSTV soft-thresholds every scalar entry.
///
/// GOTTV expects `gradients` in the opponent domain.
pub fn w_subproblem(
    gradients: &Splitting,
    multipliers: &Splitting,
    r: f64,
    regularizer: &Regularizer,
) -> Splitting {
    let mut out = Splitting::zeros_like(&gradients.x, gradients.f.is_some());
    w_subproblem_into(gradients, multipliers, r, regularizer, &mut out);
    out
}

/// As [`w_subproblem`], writing into `out` (shaped like `gradients`).
pub fn w_subproblem_into(
    gradients: &Splitting,
    multipliers: &Splitting,
    r: f64,
    regularizer: &Regularizer,
    out: &mut Splitting,
) {
    let inv_r = 1.0 / r;
    out.x.assign_axpy(&gradients.x, -inv_r, &multipliers.x);
    out.y.assign_axpy(&gradients.y, -inv_r, &multipliers.y);
    match (&gradients.f, &multipliers.f, out.f.as_mut()) {
        (Some(g), Some(u), Some(o)) => o.assign_axpy(g, -inv_r, u),
        (Some(g), None, Some(o)) => o.as_mut_slice().copy_from_slice(g.as_slice()),
        _ => {}
    }
    let (wx, wy, wf) = (&mut out.x, &mut out.y, &mut out.f);

    let (m, n, d) = wx.shape();
    let len = m * n;
    match regularizer {
        Regularizer::Gottv { alpha, .. } | Regularizer::Svtv { alpha } => {
            let (xs, ys) = (wx.as_mut_slice(), wy.as_mut_slice());
            shrink_groups(xs, ys, len, 0..d - 1, |_| inv_r);
            shrink_groups(xs, ys, len, d - 1..d, |_| alpha * inv_r);
        }
        Regularizer::Tv => {
            for (xs, ys) in wx.planes_mut().zip(wy.planes_mut()) {
                for (a, b) in xs.iter_mut().zip(ys.iter_mut()) {
                    let mut g = [*a, *b];
                    group_soft_threshold(&mut g, inv_r);
                    *a = g[0];
                    *b = g[1];
                }
            }
        }
        Regularizer::Vtv | Regularizer::Ssahtv { .. } => {
            let weights = match regularizer {
                Regularizer::Ssahtv { weights } => Some(weights),
                _ => None,
            };
            let (xs, ys) = (wx.as_mut_slice(), wy.as_mut_slice());
            shrink_groups(xs, ys, len, 0..d, |p| {
                weights.map_or(1.0, |w| w.values()[p]) * inv_r
            });
        }
        Regularizer::Asstv => {
            let fields = [Some(wx), Some(wy), wf.as_mut()];
            for field in fields.into_iter().flatten() {
                field
                    .as_mut_slice()
                    .iter_mut()
                    .for_each(|v| *v = soft_threshold(*v, inv_r));
            }
        }
    }
    if !matches!(regularizer, Regularizer::Asstv) {
        *wf = None;
    }
}

/// Group-shrinks, per pixel, the `(x, y)` entries of `channels` together,
/// sweeping blocks of pixels so each channel plane is read contiguously.
fn shrink_groups(
    xs: &mut [f64],
    ys: &mut [f64],
    len: usize,
    channels: std::ops::Range<usize>,
    threshold: impl Fn(usize) -> f64,
) {
    const BLOCK: usize = 256;
    let mut scale = [0.0; BLOCK];
    for p0 in (0..len).step_by(BLOCK) {
        let b = BLOCK.min(len - p0);
        let scale = &mut scale[..b];
        scale.iter_mut().for_each(|s| *s = 0.0);
        for k in channels.clone() {
            let off = k * len + p0;
            for ((s, x), y) in scale
                .iter_mut()
                .zip(&xs[off..off + b])
                .zip(&ys[off..off + b])
            {
                *s += x * x + y * y;
            }
        }
        for (i, s) in scale.iter_mut().enumerate() {
            let norm = s.sqrt();
            let t = threshold(p0 + i);
            *s = if norm <= t { 0.0 } else { 1.0 - t / norm };
        }
        for k in channels.clone() {
            let off = k * len + p0;
            for ((s, x), y) in scale
                .iter()
                .zip(&mut xs[off..off + b])
                .zip(&mut ys[off..off + b])
            {
                *x *= s;
                *y *= s;
            }
        }
    }
}
