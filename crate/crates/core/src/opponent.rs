//! The generalized opponent transformation family.
//!
//! Every admissible `d x d` opponent matrix is `Q = B P`, where `B` is the
//! canonical matrix built by [`build_b`] and `P` permutes columns. Matrices
//! that differ only in the sign of their first row are identified; the
//! canonical member of each class has a positive first nonzero entry in its
//! first row, which for `B P` means `p[0] < p[1]`.

use std::fmt;

use crate::error::{Error, Result};
use crate::tensor::MsiTensor;

const VERIFY_TOL: f64 = 1e-10;

/// Largest `d` accepted by [`enumerate_qd`] (`8!/2 = 20160` bases).
pub const MAX_ENUMERATION_D: usize = 8;
/// Largest `d` accepted by [`enumerate_hd`].
pub const MAX_H_D: usize = 12;

/// A validated opponent basis `Q = B P`.
#[derive(Debug, Clone, PartialEq)]
pub struct OpponentBasis {
    d: usize,
    matrix: Vec<f64>,
    perm: Vec<usize>,
}

impl OpponentBasis {
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Row-major `d x d` entries.
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    /// Zero-based permutation with `P[i][perm[i]] = 1`, i.e. column `i` of
    /// `B` lands in column `perm[i]` of `Q`.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.matrix[row * self.d + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.matrix[row * self.d..(row + 1) * self.d]
    }

    /// `Q v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.d)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `Q^T v`.
    pub fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.d];
        for (r, &vr) in v.iter().enumerate().take(self.d) {
            for (o, q) in out.iter_mut().zip(self.row(r)) {
                *o += q * vr;
            }
        }
        out
    }

    /// True when this basis is the canonical member of its sign class.
    pub fn is_canonical(&self) -> bool {
        self.perm[0] < self.perm[1]
    }

    /// The canonical member of this basis's sign class.
    pub fn canonical(&self) -> OpponentBasis {
        if self.is_canonical() {
            self.clone()
        } else {
            let mut p = self.perm.clone();
            p.swap(0, 1);
            from_permutation(self.d, p)
        }
    }

    /// One-based permutation, as printed in tables: `(1 2 3 4)` is `B`.
    pub fn permutation_label(&self) -> String {
        let parts: Vec<String> = self.perm.iter().map(|p| (p + 1).to_string()).collect();
        format!("({})", parts.join(" "))
    }
}

fn from_permutation(d: usize, perm: Vec<usize>) -> OpponentBasis {
    let b = b_entries(d);
    let mut matrix = vec![0.0; d * d];
    for r in 0..d {
        for (i, &pi) in perm.iter().enumerate() {
            matrix[r * d + pi] = b[r * d + i];
        }
    }
    OpponentBasis { d, matrix, perm }
}

fn b_entries(d: usize) -> Vec<f64> {
    let mut b = vec![0.0; d * d];
    for r in 0..d - 1 {
        // one-based row index i = r + 1
        let i = (r + 1) as f64;
        let denom = (i * (i + 1.0)).sqrt();
        for c in 0..=r {
            b[r * d + c] = 1.0 / denom;
        }
        b[r * d + r + 1] = -i / denom;
    }
    let avg = 1.0 / (d as f64).sqrt();
    for c in 0..d {
        b[(d - 1) * d + c] = avg;
    }
    b
}

/// The canonical opponent matrix `B` with the identity permutation.
pub fn build_b(d: usize) -> Result<OpponentBasis> {
    if d < 2 {
        return Err(Error::TooFewChannels);
    }
    Ok(from_permutation(d, (0..d).collect()))
}

fn check_permutation(d: usize, p: &[usize]) -> Result<()> {
    if p.len() != d {
        return Err(Error::InvalidPermutation(format!(
            "length {} for d = {d}",
            p.len()
        )));
    }
    let mut seen = vec![false; d];
    for &v in p {
        if v >= d || seen[v] {
            return Err(Error::InvalidPermutation(format!(
                "{p:?} is not a bijection on 0..{d}"
            )));
        }
        seen[v] = true;
    }
    Ok(())
}

/// Reorders the columns of `basis` by the zero-based permutation `p`
/// (`Q' = Q P` with `P[i][p[i]] = 1`).
pub fn permute_basis(basis: &OpponentBasis, p: &[usize]) -> Result<OpponentBasis> {
    check_permutation(basis.d, p)?;
    let composed: Vec<usize> = basis.perm.iter().map(|&c| p[c]).collect();
    Ok(from_permutation(basis.d, composed))
}

/// Builds `B P` directly from a zero-based permutation.
pub fn basis_from_permutation(d: usize, p: &[usize]) -> Result<OpponentBasis> {
    if d < 2 {
        return Err(Error::TooFewChannels);
    }
    check_permutation(d, p)?;
    Ok(from_permutation(d, p.to_vec()))
}

/// A condition an opponent matrix failed.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NotSquare {
        len: usize,
    },
    NotOrthogonal {
        max_deviation: f64,
    },
    LastRow {
        row: usize,
    },
    RowSum {
        row: usize,
        sum: f64,
    },
    NegativeCount {
        row: usize,
        count: usize,
    },
    PositiveCount {
        row: usize,
        expected: usize,
        found: usize,
    },
    UnequalPositives {
        row: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotSquare { len } => write!(f, "{len} entries is not a square matrix"),
            Violation::NotOrthogonal { max_deviation } => {
                write!(f, "orthogonality: max |QQ^T - I| = {max_deviation:.3e}")
            }
            Violation::LastRow { row } => write!(f, "last row {row} is not the averaging row"),
            Violation::RowSum { row, sum } => write!(f, "G1: row {row} sums to {sum:.3e}"),
            Violation::NegativeCount { row, count } => {
                write!(f, "G2: row {row} has {count} negative entries")
            }
            Violation::PositiveCount {
                row,
                expected,
                found,
            } => write!(
                f,
                "G3: row {row} has {found} positive entries, expected {expected}"
            ),
            Violation::UnequalPositives { row } => {
                write!(f, "G3: row {row} positive entries differ")
            }
        }
    }
}

/// Outcome of [`verify_opponent`].
#[derive(Debug, Clone, Default)]
pub struct OpponentReport {
    pub violations: Vec<Violation>,
}

impl OpponentReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks a row-major square matrix against orthogonality, the averaging
/// last row, and G1-G3 on the other rows (one-based row `i` needs one
/// negative and `i` equal positive entries). A row passes G2/G3 if either it
/// or its negation does.
pub fn verify_opponent(matrix: &[f64]) -> OpponentReport {
    let mut violations = Vec::new();
    let d = (matrix.len() as f64).sqrt().round() as usize;
    if d * d != matrix.len() || d == 0 {
        violations.push(Violation::NotSquare { len: matrix.len() });
        return OpponentReport { violations };
    }
    let row = |r: usize| &matrix[r * d..(r + 1) * d];

    let mut max_dev = 0.0f64;
    for a in 0..d {
        for b in 0..d {
            let dot: f64 = row(a).iter().zip(row(b)).map(|(x, y)| x * y).sum();
            let target = if a == b { 1.0 } else { 0.0 };
            max_dev = max_dev.max((dot - target).abs());
        }
    }
    if max_dev > VERIFY_TOL {
        violations.push(Violation::NotOrthogonal {
            max_deviation: max_dev,
        });
    }

    let avg = 1.0 / (d as f64).sqrt();
    if row(d - 1).iter().any(|v| (v - avg).abs() > VERIFY_TOL) {
        violations.push(Violation::LastRow { row: d });
    }

    for r in 0..d.saturating_sub(1) {
        let one_based = r + 1;
        let sum: f64 = row(r).iter().sum();
        if sum.abs() > VERIFY_TOL {
            violations.push(Violation::RowSum {
                row: one_based,
                sum,
            });
        }
        let forward = sign_pattern(row(r), one_based, 1.0);
        if forward.is_empty() {
            continue;
        }
        let flipped = sign_pattern(row(r), one_based, -1.0);
        if flipped.is_empty() {
            continue;
        }
        violations.extend(forward);
    }
    OpponentReport { violations }
}

fn sign_pattern(row: &[f64], one_based: usize, sign: f64) -> Vec<Violation> {
    let mut out = Vec::new();
    let negatives = row.iter().filter(|v| sign * **v < -VERIFY_TOL).count();
    if negatives != 1 {
        out.push(Violation::NegativeCount {
            row: one_based,
            count: negatives,
        });
    }
    let positives: Vec<f64> = row
        .iter()
        .map(|v| sign * v)
        .filter(|v| *v > VERIFY_TOL)
        .collect();
    if positives.len() != one_based {
        out.push(Violation::PositiveCount {
            row: one_based,
            expected: one_based,
            found: positives.len(),
        });
    }
    if let Some(first) = positives.first() {
        if positives.iter().any(|v| (v - first).abs() > VERIFY_TOL) {
            out.push(Violation::UnequalPositives { row: one_based });
        }
    }
    out
}

/// One canonical representative per sign class of `Q_d`, in lexicographic
/// order of the permutation. The list has `d!/2` entries.
pub fn enumerate_qd(d: usize) -> Result<Vec<OpponentBasis>> {
    if d < 2 {
        return Err(Error::TooFewChannels);
    }
    if d > MAX_ENUMERATION_D {
        return Err(Error::EnumerationTooLarge(d));
    }
    let mut out = Vec::new();
    let mut perm: Vec<usize> = (0..d).collect();
    loop {
        if perm[0] < perm[1] {
            out.push(from_permutation(d, perm.clone()));
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    Ok(out)
}

fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

/// Square integer matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    pub d: usize,
    pub entries: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(d: usize) -> Self {
        Self {
            d,
            entries: vec![0; d * d],
        }
    }

    pub fn get(&self, r: usize, c: usize) -> i64 {
        self.entries[r * self.d + c]
    }

    pub fn nonzeros(&self) -> usize {
        self.entries.iter().filter(|v| **v != 0).count()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.d)
            .map(|r| (0..self.d).map(|c| self.get(r, c) as f64 * v[c]).sum())
            .collect()
    }
}

/// The coupling matrix `C_d`: `d - 1` on the diagonal, `-1` elsewhere.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CouplingMatrix {
    matrix: IntMatrix,
}

impl CouplingMatrix {
    pub fn dim(&self) -> usize {
        self.matrix.d
    }
    pub fn matrix(&self) -> &IntMatrix {
        &self.matrix
    }
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.matrix.apply(v)
    }
}

pub fn build_cd(d: usize) -> Result<CouplingMatrix> {
    if d < 2 {
        return Err(Error::TooFewChannels);
    }
    let mut m = IntMatrix::zeros(d);
    for r in 0..d {
        for c in 0..d {
            m.entries[r * d + c] = if r == c { d as i64 - 1 } else { -1 };
        }
    }
    Ok(CouplingMatrix { matrix: m })
}

/// `max |C_d Q^T - Q^T Lambda_d|` with `Lambda_d = diag(d, ..., d, 0)`.
pub fn check_eigenstructure(basis: &OpponentBasis) -> f64 {
    eigen_residual(basis.d, basis.matrix())
}

/// Same residual for an arbitrary row-major `d x d` matrix.
pub fn eigen_residual(d: usize, q: &[f64]) -> f64 {
    let cd = match build_cd(d) {
        Ok(c) => c,
        Err(_) => return f64::INFINITY,
    };
    let mut worst = 0.0f64;
    // column c of Q^T is row c of Q
    for c in 0..d {
        let v = &q[c * d..(c + 1) * d];
        let lambda = if c + 1 == d { 0.0 } else { d as f64 };
        for (cv, vr) in cd.apply(v).iter().zip(v) {
            worst = worst.max((cv - lambda * vr).abs());
        }
    }
    worst
}

/// The three-channel coupling block `C`.
pub const C3: [[i64; 3]; 3] = [[2, -1, -1], [-1, 2, -1], [-1, -1, 2]];

/// A `d x d` matrix that is zero except for the principal submatrix on
/// `indices`, which equals `C`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TripleCoupling {
    pub indices: [usize; 3],
    pub matrix: IntMatrix,
}

/// All `C(d, 3)` embeddings of `C` as a principal submatrix.
pub fn enumerate_hd(d: usize) -> Result<Vec<TripleCoupling>> {
    if d < 3 {
        return Err(Error::TooFewChannelsForH);
    }
    if d > MAX_H_D {
        return Err(Error::EnumerationTooLarge(d));
    }
    let mut out = Vec::new();
    for a in 0..d {
        for b in a + 1..d {
            for c in b + 1..d {
                let idx = [a, b, c];
                let mut m = IntMatrix::zeros(d);
                for (x, &rx) in idx.iter().enumerate() {
                    for (y, &cy) in idx.iter().enumerate() {
                        m.entries[rx * d + cy] = C3[x][y];
                    }
                }
                out.push(TripleCoupling {
                    indices: idx,
                    matrix: m,
                });
            }
        }
    }
    Ok(out)
}

/// `max |(d - 2) C_d - sum H|` in exact integer arithmetic.
pub fn verify_h_decomposition(d: usize) -> Result<i64> {
    let cd = build_cd(d)?;
    let hs = enumerate_hd(d)?;
    let mut sum = IntMatrix::zeros(d);
    for h in &hs {
        for (s, v) in sum.entries.iter_mut().zip(&h.matrix.entries) {
            *s += v;
        }
    }
    let scale = d as i64 - 2;
    Ok(cd
        .matrix
        .entries
        .iter()
        .zip(&sum.entries)
        .map(|(c, s)| (scale * c - s).abs())
        .max()
        .unwrap_or(0))
}

/// Pixel-wise `Phi(i,j) = Q U(i,j)`.
pub fn transform_image(image: &MsiTensor, basis: &OpponentBasis) -> Result<MsiTensor> {
    mix_channels(image, basis, false)
}

/// Pixel-wise `U(i,j) = Q^T Phi(i,j)`.
pub fn inverse_transform_image(image: &MsiTensor, basis: &OpponentBasis) -> Result<MsiTensor> {
    mix_channels(image, basis, true)
}

fn mix_channels(image: &MsiTensor, basis: &OpponentBasis, transpose: bool) -> Result<MsiTensor> {
    let d = basis.d;
    if image.channels() != d {
        return Err(Error::DimensionMismatch(format!(
            "image has {} channels, basis is {d}x{d}",
            image.channels()
        )));
    }
    let len = image.plane_len();
    let mut out = image.zeros_like();
    let src = image.as_slice();
    let dst = out.as_mut_slice();
    for r in 0..d {
        for c in 0..d {
            let w = if transpose {
                basis.get(c, r)
            } else {
                basis.get(r, c)
            };
            if w == 0.0 {
                continue;
            }
            let (s, t) = (
                &src[c * len..(c + 1) * len],
                &mut dst[r * len..(r + 1) * len],
            );
            for (o, v) in t.iter_mut().zip(s) {
                *o += w * v;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const S2: f64 = std::f64::consts::SQRT_2;

    fn q1() -> [f64; 9] {
        let s6 = 6f64.sqrt();
        let s3 = 3f64.sqrt();
        [
            1.0 / S2,
            -1.0 / S2,
            0.0,
            1.0 / s6,
            1.0 / s6,
            -2.0 / s6,
            1.0 / s3,
            1.0 / s3,
            1.0 / s3,
        ]
    }

    fn q2() -> [f64; 9] {
        let s6 = 6f64.sqrt();
        let s3 = 3f64.sqrt();
        [
            1.0 / S2,
            0.0,
            -1.0 / S2,
            1.0 / s6,
            -2.0 / s6,
            1.0 / s6,
            1.0 / s3,
            1.0 / s3,
            1.0 / s3,
        ]
    }

    fn q3() -> [f64; 9] {
        let s6 = 6f64.sqrt();
        let s3 = 3f64.sqrt();
        [
            0.0,
            -1.0 / S2,
            1.0 / S2,
            -2.0 / s6,
            1.0 / s6,
            1.0 / s6,
            1.0 / s3,
            1.0 / s3,
            1.0 / s3,
        ]
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn b3_is_q1() {
        let b = build_b(3).unwrap();
        assert!(close(b.matrix(), &q1(), 1e-15));
    }

    #[test]
    fn b2_rows() {
        let b = build_b(2).unwrap();
        assert!(close(
            b.matrix(),
            &[1.0 / S2, -1.0 / S2, 1.0 / S2, 1.0 / S2],
            1e-15
        ));
    }

    #[test]
    fn b10_verifies() {
        let b = build_b(10).unwrap();
        assert!(verify_opponent(b.matrix()).is_valid());
        assert!(check_eigenstructure(&b) < 1e-12);
    }

    #[test]
    fn build_b_rejects_one_channel() {
        assert!(matches!(build_b(1), Err(Error::TooFewChannels)));
    }

    #[test]
    fn permutations_reproduce_q2_and_q3() {
        let b = build_b(3).unwrap();
        assert_eq!(permute_basis(&b, &[0, 1, 2]).unwrap(), b);
        let q2m = permute_basis(&b, &[0, 2, 1]).unwrap();
        assert!(close(q2m.matrix(), &q2(), 1e-15));
        let q3m = permute_basis(&b, &[2, 1, 0]).unwrap();
        assert!(close(q3m.matrix(), &q3(), 1e-15));
        assert!(permute_basis(&b, &[0, 0, 1]).is_err());
        assert!(permute_basis(&b, &[0, 1]).is_err());
    }

    #[test]
    fn verify_accepts_q1_and_sign_twin() {
        assert!(verify_opponent(&q1()).is_valid());
        let mut twin = q1();
        for v in twin.iter_mut().take(3) {
            *v = -*v;
        }
        assert!(verify_opponent(&twin).is_valid());
    }

    #[test]
    fn verify_rejects_identity() {
        let id = [1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0];
        let report = verify_opponent(&id);
        assert!(!report.is_valid());
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::LastRow { .. })));
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::RowSum { .. })));
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_qd(2).unwrap().len(), 1);
        assert_eq!(enumerate_qd(3).unwrap().len(), 3);
        assert_eq!(enumerate_qd(4).unwrap().len(), 12);
        assert!(matches!(
            enumerate_qd(9),
            Err(Error::EnumerationTooLarge(9))
        ));
    }

    #[test]
    fn enumeration_d4_matches_permutation_table() {
        let labels: Vec<String> = enumerate_qd(4)
            .unwrap()
            .iter()
            .map(|b| b.permutation_label())
            .collect();
        for expected in [
            "(1 2 3 4)",
            "(3 4 2 1)",
            "(3 4 1 2)",
            "(2 4 3 1)",
            "(2 4 1 3)",
            "(2 3 4 1)",
            "(2 3 1 4)",
            "(1 4 3 2)",
            "(1 4 2 3)",
            "(1 3 4 2)",
            "(1 3 2 4)",
            "(1 2 4 3)",
        ] {
            assert!(labels.iter().any(|l| l == expected), "{expected} missing");
        }
    }

    #[test]
    fn canonical_flips_first_row() {
        let b = build_b(3).unwrap();
        let q3m = permute_basis(&b, &[2, 1, 0]).unwrap();
        assert!(!q3m.is_canonical());
        let c = q3m.canonical();
        assert!(c.is_canonical());
        for col in 0..3 {
            assert!((c.get(0, col) + q3m.get(0, col)).abs() < 1e-15);
            assert!((c.get(1, col) - q3m.get(1, col)).abs() < 1e-15);
        }
    }

    #[test]
    fn coupling_matrices() {
        let c3 = build_cd(3).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                assert_eq!(c3.matrix().get(r, c), C3[r][c]);
            }
        }
        let c4 = build_cd(4).unwrap();
        assert_eq!(c4.matrix().get(2, 2), 3);
        assert_eq!(c4.matrix().get(0, 3), -1);
        for d in 2..9 {
            let m = build_cd(d).unwrap();
            for r in 0..d {
                assert_eq!((0..d).map(|c| m.matrix().get(r, c)).sum::<i64>(), 0);
            }
        }
    }

    #[test]
    fn eigen_residual_q1_and_random_orthogonal() {
        let b = build_b(3).unwrap();
        assert!(check_eigenstructure(&b) < 1e-12);
        // rotation mixing the averaging row into an opponent row
        let (c, s) = (0.6f64, 0.8f64);
        let q = q1();
        let mut rot = q;
        for col in 0..3 {
            rot[3 + col] = c * q[3 + col] + s * q[6 + col];
            rot[6 + col] = -s * q[3 + col] + c * q[6 + col];
        }
        assert!(eigen_residual(3, &rot) > 0.1);
    }

    #[test]
    fn h_sets() {
        let h3 = enumerate_hd(3).unwrap();
        assert_eq!(h3.len(), 1);
        assert_eq!(h3[0].matrix, build_cd(3).unwrap().matrix().clone());
        assert_eq!(enumerate_hd(4).unwrap().len(), 4);
        let h5 = enumerate_hd(5).unwrap();
        assert_eq!(h5.len(), 10);
        assert!(h5.iter().all(|h| h.matrix.nonzeros() == 9));
        assert!(matches!(enumerate_hd(2), Err(Error::TooFewChannelsForH)));
    }

    #[test]
    fn h_decomposition_exact() {
        for d in 3..=8 {
            assert_eq!(verify_h_decomposition(d).unwrap(), 0, "d = {d}");
        }
    }

    #[test]
    fn transform_constant_pixel() {
        let b = build_b(3).unwrap();
        let u = MsiTensor::from_vec(1, 1, 3, vec![0.4, 0.4, 0.4]).unwrap();
        let phi = transform_image(&u, &b).unwrap();
        assert!(phi.get(0, 0, 0).abs() < 1e-15);
        assert!(phi.get(0, 0, 1).abs() < 1e-15);
        assert!((phi.get(0, 0, 2) - 0.4 * 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn transform_dimension_mismatch() {
        let b = build_b(3).unwrap();
        let u = MsiTensor::zeros(2, 2, 4).unwrap();
        assert!(transform_image(&u, &b).is_err());
    }
}
