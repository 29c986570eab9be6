//! Periodic forward differences and their adjoints.
//!
//! Axis convention: `x` runs along columns (`j`), `y` along rows (`i`), and
//! the spectral difference runs along channels (`k`). All three wrap.

use crate::tensor::MsiTensor;

/// `D_x U(i,j,k) = U(i, j+1, k) - U(i, j, k)`, wrapping in `j`.
pub fn diff_x(image: &MsiTensor) -> MsiTensor {
    let mut out = image.zeros_like();
    diff_x_into(image, &mut out);
    out
}

pub fn diff_x_into(image: &MsiTensor, out: &mut MsiTensor) {
    let (m, n, _) = image.shape();
    for (src, dst) in image.planes().zip(out.planes_mut()) {
        for i in 0..m {
            let row = &src[i * n..(i + 1) * n];
            let drow = &mut dst[i * n..(i + 1) * n];
            for j in 0..n - 1 {
                drow[j] = row[j + 1] - row[j];
            }
            drow[n - 1] = row[0] - row[n - 1];
        }
    }
}

/// `D_y U(i,j,k) = U(i+1, j, k) - U(i, j, k)`, wrapping in `i`.
pub fn diff_y(image: &MsiTensor) -> MsiTensor {
    let mut out = image.zeros_like();
    diff_y_into(image, &mut out);
    out
}

pub fn diff_y_into(image: &MsiTensor, out: &mut MsiTensor) {
    let (m, n, _) = image.shape();
    for (src, dst) in image.planes().zip(out.planes_mut()) {
        for i in 0..m {
            let next = if i + 1 == m { 0 } else { i + 1 };
            for j in 0..n {
                dst[i * n + j] = src[next * n + j] - src[i * n + j];
            }
        }
    }
}

/// `D_f U(i,j,k) = U(i, j, k+1) - U(i, j, k)`, wrapping in `k`.
pub fn diff_spectral(image: &MsiTensor) -> MsiTensor {
    let mut out = image.zeros_like();
    diff_spectral_into(image, &mut out);
    out
}

pub fn diff_spectral_into(image: &MsiTensor, out: &mut MsiTensor) {
    let d = image.channels();
    let len = image.plane_len();
    let src = image.as_slice();
    let dst = out.as_mut_slice();
    for k in 0..d {
        let next = if k + 1 == d { 0 } else { k + 1 };
        for p in 0..len {
            dst[k * len + p] = src[next * len + p] - src[k * len + p];
        }
    }
}

/// Adjoint of [`diff_x`]: `P(i, j-1) - P(i, j)`.
pub fn adjoint_diff_x(field: &MsiTensor) -> MsiTensor {
    let mut out = field.zeros_like();
    add_adjoint_diff_x(field, 1.0, &mut out);
    out
}

/// Adjoint of [`diff_y`]: `P(i-1, j) - P(i, j)`.
pub fn adjoint_diff_y(field: &MsiTensor) -> MsiTensor {
    let mut out = field.zeros_like();
    add_adjoint_diff_y(field, 1.0, &mut out);
    out
}

/// Adjoint of [`diff_spectral`]: `P(k-1) - P(k)`.
pub fn adjoint_diff_spectral(field: &MsiTensor) -> MsiTensor {
    let mut out = field.zeros_like();
    add_adjoint_diff_spectral(field, 1.0, &mut out);
    out
}

/// `out += scale * D_x^T field`.
pub fn add_adjoint_diff_x(field: &MsiTensor, scale: f64, out: &mut MsiTensor) {
    let (m, n, _) = field.shape();
    for (src, dst) in field.planes().zip(out.planes_mut()) {
        add_adjoint_diff_x_plane(src, scale, dst, m, n);
    }
}

/// `out += scale * D_y^T field`.
pub fn add_adjoint_diff_y(field: &MsiTensor, scale: f64, out: &mut MsiTensor) {
    let (m, n, _) = field.shape();
    for (src, dst) in field.planes().zip(out.planes_mut()) {
        add_adjoint_diff_y_plane(src, scale, dst, m, n);
    }
}

/// Single-plane form of [`add_adjoint_diff_x`] on an `m x n` row-major plane.
pub fn add_adjoint_diff_x_plane(src: &[f64], scale: f64, dst: &mut [f64], m: usize, n: usize) {
    for i in 0..m {
        let row = &src[i * n..(i + 1) * n];
        let drow = &mut dst[i * n..(i + 1) * n];
        drow[0] += scale * (row[n - 1] - row[0]);
        for j in 1..n {
            drow[j] += scale * (row[j - 1] - row[j]);
        }
    }
}

/// Single-plane form of [`add_adjoint_diff_y`].
pub fn add_adjoint_diff_y_plane(src: &[f64], scale: f64, dst: &mut [f64], m: usize, n: usize) {
    for i in 0..m {
        let prev = if i == 0 { m - 1 } else { i - 1 };
        for j in 0..n {
            dst[i * n + j] += scale * (src[prev * n + j] - src[i * n + j]);
        }
    }
}

/// `out += scale * D_f^T field`.
pub fn add_adjoint_diff_spectral(field: &MsiTensor, scale: f64, out: &mut MsiTensor) {
    let d = field.channels();
    let len = field.plane_len();
    let src = field.as_slice();
    let dst = out.as_mut_slice();
    for k in 0..d {
        let prev = if k == 0 { d - 1 } else { k - 1 };
        for p in 0..len {
            dst[k * len + p] += scale * (src[prev * len + p] - src[k * len + p]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pseudo_random(m: usize, n: usize, d: usize, seed: u64) -> MsiTensor {
        let mut s = seed;
        MsiTensor::from_fn(m, n, d, |_, _, _| {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
        .unwrap()
    }

    #[test]
    fn constant_image_has_zero_differences() {
        let c = MsiTensor::filled(4, 5, 3, 0.7).unwrap();
        assert_eq!(diff_x(&c).norm(), 0.0);
        assert_eq!(diff_y(&c).norm(), 0.0);
        assert_eq!(diff_spectral(&c).norm(), 0.0);
    }

    #[test]
    fn one_by_two_wraps() {
        let u = MsiTensor::from_vec(1, 2, 1, vec![2.0, 5.0]).unwrap();
        assert_eq!(diff_x(&u).as_slice(), &[3.0, -3.0]);
        // a single row wraps onto itself
        assert_eq!(diff_y(&u).as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn spectral_wraps() {
        let u = MsiTensor::from_vec(1, 1, 3, vec![1.0, 2.0, 4.0]).unwrap();
        assert_eq!(diff_spectral(&u).as_slice(), &[1.0, 2.0, -3.0]);
        let single = MsiTensor::from_vec(1, 1, 1, vec![9.0]).unwrap();
        assert_eq!(diff_spectral(&single).as_slice(), &[0.0]);
    }

    #[test]
    fn telescoping_sums_vanish() {
        let u = pseudo_random(4, 4, 3, 11);
        for field in [diff_x(&u), diff_y(&u)] {
            for plane in field.planes() {
                assert!(plane.iter().sum::<f64>().abs() < 1e-10 * 16.0);
            }
        }
        // spectral differences telescope across channels at each pixel
        let f = diff_spectral(&u);
        for p in 0..16 {
            let s: f64 = (0..3).map(|k| f.as_slice()[k * 16 + p]).sum();
            assert!(s.abs() < 1e-12);
        }
    }

    #[test]
    fn adjoint_identity_5x4x2() {
        let u = pseudo_random(5, 4, 2, 3);
        let p = pseudo_random(5, 4, 2, 4);
        let pairs: [(fn(&MsiTensor) -> MsiTensor, fn(&MsiTensor) -> MsiTensor); 3] = [
            (diff_x, adjoint_diff_x),
            (diff_y, adjoint_diff_y),
            (diff_spectral, adjoint_diff_spectral),
        ];
        for (fwd, adj) in pairs {
            let lhs = fwd(&u).dot(&p);
            let rhs = u.dot(&adj(&p));
            assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn adjoint_of_zero_and_constant() {
        let z = MsiTensor::zeros(3, 3, 2).unwrap();
        assert_eq!(adjoint_diff_x(&z).norm(), 0.0);
        let c = MsiTensor::filled(3, 4, 2, 1.5).unwrap();
        assert_eq!(adjoint_diff_x(&diff_x(&c)).norm(), 0.0);
    }
}
