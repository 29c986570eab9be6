//! Dense multispectral image cubes.

use crate::error::{Error, Result};

/// An `m x n x d` multispectral image stored channel-planar, row-major
/// within each channel.
#[derive(Debug, Clone, PartialEq)]
pub struct MsiTensor {
    rows: usize,
    cols: usize,
    channels: usize,
    data: Vec<f64>,
}

/// Borrowed view of a single channel.
#[derive(Debug, Clone, Copy)]
pub struct ChannelView<'a> {
    pub rows: usize,
    pub cols: usize,
    pub data: &'a [f64],
}

impl<'a> ChannelView<'a> {
    pub fn new(rows: usize, cols: usize, data: &'a [f64]) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(Error::InvalidDimensions(format!(
                "channel {rows}x{cols} with {} values",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }
}

impl MsiTensor {
    pub fn zeros(rows: usize, cols: usize, channels: usize) -> Result<Self> {
        check_dims(rows, cols, channels)?;
        Ok(Self {
            rows,
            cols,
            channels,
            data: vec![0.0; rows * cols * channels],
        })
    }

    pub fn filled(rows: usize, cols: usize, channels: usize, value: f64) -> Result<Self> {
        if !value.is_finite() {
            return Err(Error::NonFinite("fill value"));
        }
        let mut t = Self::zeros(rows, cols, channels)?;
        t.data.fill(value);
        Ok(t)
    }

    /// Wraps channel-planar data. Rejects wrong lengths and non-finite values.
    pub fn from_vec(rows: usize, cols: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(rows, cols, channels)?;
        if data.len() != rows * cols * channels {
            return Err(Error::InvalidDimensions(format!(
                "{rows}x{cols}x{channels} needs {} values, got {}",
                rows * cols * channels,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("tensor data"));
        }
        Ok(Self {
            rows,
            cols,
            channels,
            data,
        })
    }

    /// Builds a tensor from a function of `(i, j, k)`.
    pub fn from_fn(
        rows: usize,
        cols: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut t = Self::zeros(rows, cols, channels)?;
        for k in 0..channels {
            for i in 0..rows {
                for j in 0..cols {
                    t.data[(k * rows + i) * cols + j] = f(i, j, k);
                }
            }
        }
        if t.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("tensor data"));
        }
        Ok(t)
    }

    /// Zero tensor of the same shape.
    pub fn zeros_like(&self) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            channels: self.channels,
            data: vec![0.0; self.data.len()],
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }
    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }
    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }
    #[inline]
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.rows, self.cols, self.channels)
    }
    #[inline]
    pub fn plane_len(&self) -> usize {
        self.rows * self.cols
    }

    #[inline]
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Mutable access to the raw buffer. Callers must keep values finite.
    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(k * self.rows + i) * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        self.data[(k * self.rows + i) * self.cols + j] = value;
    }

    pub fn channel(&self, k: usize) -> ChannelView<'_> {
        let len = self.plane_len();
        ChannelView {
            rows: self.rows,
            cols: self.cols,
            data: &self.data[k * len..(k + 1) * len],
        }
    }

    pub fn channel_slice(&self, k: usize) -> &[f64] {
        let len = self.plane_len();
        &self.data[k * len..(k + 1) * len]
    }

    pub fn channel_slice_mut(&mut self, k: usize) -> &mut [f64] {
        let len = self.plane_len();
        &mut self.data[k * len..(k + 1) * len]
    }

    /// Iterator over channel planes.
    pub fn planes(&self) -> std::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.plane_len())
    }

    pub fn planes_mut(&mut self) -> std::slice::ChunksExactMut<'_, f64> {
        let len = self.plane_len();
        self.data.chunks_exact_mut(len)
    }

    /// Pixel vector `U(i, j, :)`.
    pub fn pixel(&self, i: usize, j: usize) -> Vec<f64> {
        (0..self.channels).map(|k| self.get(i, j, k)).collect()
    }

    pub fn same_shape(&self, other: &MsiTensor) -> bool {
        self.shape() == other.shape()
    }

    pub fn ensure_same_shape(&self, other: &MsiTensor, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "{what}: {:?} vs {:?}",
                self.shape(),
                other.shape()
            )))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// Euclidean inner product over all entries.
    pub fn dot(&self, other: &MsiTensor) -> f64 {
        debug_assert!(self.same_shape(other));
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Frobenius norm of the whole tensor.
    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn max_abs_diff(&self, other: &MsiTensor) -> f64 {
        debug_assert!(self.same_shape(other));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `self + scale * other`, in place.
    pub fn axpy(&mut self, scale: f64, other: &MsiTensor) {
        debug_assert!(self.same_shape(other));
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += scale * b;
        }
    }

    /// `self = a + scale * b`, reusing storage.
    pub fn assign_axpy(&mut self, a: &MsiTensor, scale: f64, b: &MsiTensor) {
        debug_assert!(self.same_shape(a) && self.same_shape(b));
        for ((o, x), y) in self.data.iter_mut().zip(&a.data).zip(&b.data) {
            *o = x + scale * y;
        }
    }

    /// `|self - other|_F` without allocating.
    pub fn distance(&self, other: &MsiTensor) -> f64 {
        debug_assert!(self.same_shape(other));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn scaled(&self, scale: f64) -> MsiTensor {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= scale);
        out
    }

    pub fn sub(&self, other: &MsiTensor) -> MsiTensor {
        let mut out = self.clone();
        out.axpy(-1.0, other);
        out
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> MsiTensor {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v = f(*v));
        out
    }

    /// Stacks single-channel planes of equal size.
    pub fn from_planes(rows: usize, cols: usize, planes: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols * planes.len());
        for p in planes {
            if p.len() != rows * cols {
                return Err(Error::InvalidDimensions("plane length".into()));
            }
            data.extend_from_slice(p);
        }
        Self::from_vec(rows, cols, planes.len(), data)
    }
}

/// `sqrt(sum of squares)` of each channel.
pub fn frobenius_norm_per_channel(image: &MsiTensor) -> Vec<f64> {
    image
        .planes()
        .map(|p| p.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect()
}

fn check_dims(rows: usize, cols: usize, channels: usize) -> Result<()> {
    if rows == 0 || cols == 0 || channels == 0 {
        return Err(Error::InvalidDimensions(format!(
            "{rows}x{cols}x{channels}: every extent must be at least 1"
        )));
    }
    rows.checked_mul(cols)
        .and_then(|v| v.checked_mul(channels))
        .ok_or_else(|| Error::InvalidDimensions("size overflow".into()))?;
    Ok(())
}
