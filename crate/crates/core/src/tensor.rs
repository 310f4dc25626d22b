//! Dense complex 3-mode tensors and the multilinear primitives used by the
//! decomposition: mode-n unfolding and folding, mode-n products, inner
//! products and norms.
//!
//! # Layout
//!
//! Entries are stored column-major with the first index fastest: entry
//! `(i1, i2, i3)` lives at `i1 + I1 * (i2 + I2 * i3)`. Unfoldings follow the
//! Kolda–Bader convention: in the mode-n unfolding the entry lands in row
//! `i_n`, and its column is obtained by enumerating the remaining indices in
//! increasing mode order with the lowest remaining mode fastest. For a 3-mode
//! tensor this gives
//!
//! | mode | column of `(i1, i2, i3)` |
//! |------|--------------------------|
//! | 1    | `i2 + I2 * i3`           |
//! | 2    | `i1 + I1 * i3`           |
//! | 3    | `i1 + I1 * i2`           |
//!
//! The index helpers below are written for an arbitrary number of modes; the
//! public tensor type fixes three.

use faer::{Mat, MatRef};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Shape of a 3-mode tensor, `(I1, I2, I3)`.
pub type Dims3 = [usize; 3];

/// Number of modes handled by the public tensor type.
pub const MODES: usize = 3;

/// Splits a column-major N-mode shape around mode `n` (0-based) into
/// `(left, I_n, right)`, the products of the dimensions before and after it.
pub(crate) fn split_around(dims: &[usize], n: usize) -> (usize, usize, usize) {
    let left = dims[..n].iter().product();
    let right = dims[n + 1..].iter().product();
    (left, dims[n], right)
}

/// Rearranges a column-major N-mode array into its mode-`n` unfolding,
/// writing through `put(row, col, value)`.
pub(crate) fn unfold_with<T: Copy>(
    dims: &[usize],
    data: &[T],
    n: usize,
    mut put: impl FnMut(usize, usize, T),
) {
    let (left, size, right) = split_around(dims, n);
    for r in 0..right {
        for i in 0..size {
            let base = left * (i + size * r);
            for l in 0..left {
                put(i, l + left * r, data[base + l]);
            }
        }
    }
}

/// Inverse of [`unfold_with`]: reads the mode-`n` unfolding through
/// `get(row, col)` into column-major storage.
pub(crate) fn fold_with<T: Copy>(
    dims: &[usize],
    out: &mut [T],
    n: usize,
    get: impl Fn(usize, usize) -> T,
) {
    let (left, size, right) = split_around(dims, n);
    for r in 0..right {
        for i in 0..size {
            let base = left * (i + size * r);
            for l in 0..left {
                out[base + l] = get(i, l + left * r);
            }
        }
    }
}

fn mode_index(mode: usize) -> Result<usize> {
    if (1..=MODES).contains(&mode) {
        Ok(mode - 1)
    } else {
        Err(Error::InvalidArgument(format!(
            "mode index must be 1, 2 or 3, got {mode}"
        )))
    }
}

fn check_dims(dims: Dims3) -> Result<()> {
    if dims.contains(&0) {
        return Err(Error::InvalidArgument(format!(
            "tensor dimensions must be positive, got {dims:?}"
        )));
    }
    Ok(())
}

/// Dense 3-mode complex tensor in column-major layout.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexTensor3 {
    dims: Dims3,
    data: Vec<Complex64>,
}

impl ComplexTensor3 {
    pub fn zeros(dims: Dims3) -> Result<Self> {
        check_dims(dims)?;
        Ok(Self {
            dims,
            data: vec![Complex64::new(0.0, 0.0); dims.iter().product()],
        })
    }

    /// Builds a tensor from column-major data, rejecting wrong lengths and
    /// non-finite entries.
    pub fn from_vec(dims: Dims3, data: Vec<Complex64>) -> Result<Self> {
        check_dims(dims)?;
        let expected: usize = dims.iter().product();
        if data.len() != expected {
            return Err(Error::ShapeMismatch(format!(
                "{} entries supplied for dims {dims:?} ({expected} expected)",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|z| !z.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite entry at linear index {pos}"
            )));
        }
        Ok(Self { dims, data })
    }

    pub fn from_fn(
        dims: Dims3,
        mut f: impl FnMut(usize, usize, usize) -> Complex64,
    ) -> Result<Self> {
        check_dims(dims)?;
        let [d1, d2, d3] = dims;
        let mut data = Vec::with_capacity(d1 * d2 * d3);
        for k in 0..d3 {
            for j in 0..d2 {
                for i in 0..d1 {
                    data.push(f(i, j, k));
                }
            }
        }
        Self::from_vec(dims, data)
    }

    /// Crate-internal constructor for data already known to be valid.
    pub(crate) fn from_raw(dims: Dims3, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), dims.iter().product::<usize>());
        Self { dims, data }
    }

    pub fn dims(&self) -> Dims3 {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    #[inline]
    pub fn linear_index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> Complex64 {
        self.data[self.linear_index(i, j, k)]
    }

    /// Mode-3 fiber at spatial position `(i, j)`: the time series of one pixel.
    pub fn fiber3(&self, i: usize, j: usize) -> Vec<Complex64> {
        (0..self.dims[2]).map(|k| self.get(i, j, k)).collect()
    }

    /// Mode-`mode` unfolding (`mode` is 1-based).
    pub fn unfold(&self, mode: usize) -> Result<UnfoldedMatrix> {
        let n = mode_index(mode)?;
        Ok(UnfoldedMatrix {
            mode,
            origin_dims: self.dims,
            matrix: self.unfold_matrix(n),
        })
    }

    pub(crate) fn unfold_matrix(&self, n: usize) -> Mat<Complex64> {
        let (_, rows, _) = split_around(&self.dims, n);
        let cols = self.data.len() / rows;
        let mut m = Mat::<Complex64>::zeros(rows, cols);
        unfold_with(&self.dims, &self.data, n, |r, c, v| m[(r, c)] = v);
        m
    }

    pub(crate) fn fold_matrix(m: MatRef<'_, Complex64>, n: usize, dims: Dims3) -> Self {
        let mut data = vec![Complex64::new(0.0, 0.0); dims.iter().product()];
        fold_with(&dims, &mut data, n, |r, c| m[(r, c)]);
        Self { dims, data }
    }

    /// Mode-n product `X ×_n A`, defined through `Y_(n) = A · X_(n)`.
    pub fn mode_multiply(&self, a: MatRef<'_, Complex64>, mode: usize) -> Result<Self> {
        let n = mode_index(mode)?;
        if a.ncols() != self.dims[n] {
            return Err(Error::ShapeMismatch(format!(
                "matrix has {} columns but mode {mode} has dimension {}",
                a.ncols(),
                self.dims[n]
            )));
        }
        if a.nrows() == 0 {
            return Err(Error::InvalidArgument(
                "mode product with a matrix of zero rows".into(),
            ));
        }
        let mut dims = self.dims;
        dims[n] = a.nrows();
        let product = a * self.unfold_matrix(n);
        let out = Self::fold_matrix(product.as_ref(), n, dims);
        out.ensure_finite()?;
        Ok(out)
    }

    /// Bilinear inner product: the sum of products of corresponding entries.
    /// Pair with [`conj`](Self::conj) for the Hermitian form.
    pub fn inner(&self, other: &Self) -> Result<Complex64> {
        self.check_same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Sum of entry magnitudes.
    pub fn l1(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).sum()
    }

    pub fn hadamard(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn conj(&self) -> Self {
        self.map(|z| z.conj())
    }

    /// Principal phase of every entry, in `(-π, π]`.
    pub fn angle(&self) -> RealTensor3 {
        RealTensor3 {
            dims: self.dims,
            data: self.data.iter().map(|z| principal_angle(*z)).collect(),
        }
    }

    /// Entry magnitudes.
    pub fn abs(&self) -> RealTensor3 {
        RealTensor3 {
            dims: self.dims,
            data: self.data.iter().map(|z| z.norm()).collect(),
        }
    }

    /// Vectorization in the canonical column-major order.
    pub fn vec(&self) -> Vec<Complex64> {
        self.data.clone()
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            dims: self.dims,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn zip_with(
        &self,
        other: &Self,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<Self> {
        self.check_same_shape(other)?;
        Ok(Self {
            dims: self.dims,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|z| z * s)
    }

    /// Keeps only the images listed in `indices` (mode-3 slices), in order.
    pub fn select_images(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidArgument("empty image selection".into()));
        }
        if let Some(&bad) = indices.iter().find(|&&k| k >= self.dims[2]) {
            return Err(Error::InvalidArgument(format!(
                "image index {bad} out of range for {} images",
                self.dims[2]
            )));
        }
        let slice = self.dims[0] * self.dims[1];
        let mut data = Vec::with_capacity(slice * indices.len());
        for &k in indices {
            data.extend_from_slice(&self.data[k * slice..(k + 1) * slice]);
        }
        Ok(Self {
            dims: [self.dims[0], self.dims[1], indices.len()],
            data,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.is_finite())
    }

    pub(crate) fn ensure_finite(&self) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::Numeric(
                "operation produced non-finite entries".into(),
            ))
        }
    }

    pub(crate) fn check_same_shape(&self, other: &Self) -> Result<()> {
        if self.dims != other.dims {
            return Err(Error::ShapeMismatch(format!(
                "{:?} vs {:?}",
                self.dims, other.dims
            )));
        }
        Ok(())
    }
}

/// `atan2`-based phase folded into `(-π, π]`.
#[inline]
pub fn principal_angle(z: Complex64) -> f64 {
    let a = z.im.atan2(z.re);
    if a == -std::f64::consts::PI {
        std::f64::consts::PI
    } else {
        a
    }
}

/// Mode-n unfolding of a [`ComplexTensor3`], remembering where it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct UnfoldedMatrix {
    mode: usize,
    origin_dims: Dims3,
    matrix: Mat<Complex64>,
}

impl UnfoldedMatrix {
    /// Wraps a matrix as the mode-`mode` unfolding of a tensor of shape
    /// `origin_dims`, checking that the shape is consistent.
    pub fn new(matrix: Mat<Complex64>, mode: usize, origin_dims: Dims3) -> Result<Self> {
        let n = mode_index(mode)?;
        check_dims(origin_dims)?;
        let rows = origin_dims[n];
        let cols: usize = origin_dims.iter().product::<usize>() / rows;
        if matrix.nrows() != rows || matrix.ncols() != cols {
            return Err(Error::ShapeMismatch(format!(
                "a mode-{mode} unfolding of {origin_dims:?} is {rows}x{cols}, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self {
            mode,
            origin_dims,
            matrix,
        })
    }

    pub fn mode(&self) -> usize {
        self.mode
    }

    pub fn origin_dims(&self) -> Dims3 {
        self.origin_dims
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> MatRef<'_, Complex64> {
        self.matrix.as_ref()
    }

    pub fn into_matrix(self) -> Mat<Complex64> {
        self.matrix
    }

    pub fn frobenius(&self) -> f64 {
        self.matrix.norm_l2()
    }
}

/// Folds a matrix back into a tensor of shape `dims` along `mode`.
pub fn fold(m: MatRef<'_, Complex64>, mode: usize, dims: Dims3) -> Result<ComplexTensor3> {
    let n = mode_index(mode)?;
    check_dims(dims)?;
    let rows = dims[n];
    let cols = dims.iter().product::<usize>() / rows;
    if m.nrows() != rows || m.ncols() != cols {
        return Err(Error::ShapeMismatch(format!(
            "cannot fold a {}x{} matrix along mode {mode} into {dims:?}",
            m.nrows(),
            m.ncols()
        )));
    }
    let out = ComplexTensor3::fold_matrix(m, n, dims);
    out.ensure_finite()?;
    Ok(out)
}

/// Convenience wrapper around [`ComplexTensor3::unfold`].
pub fn unfold(x: &ComplexTensor3, mode: usize) -> Result<UnfoldedMatrix> {
    x.unfold(mode)
}

impl UnfoldedMatrix {
    /// Folds back into the tensor this matrix was unfolded from.
    pub fn fold(&self) -> Result<ComplexTensor3> {
        fold(self.matrix.as_ref(), self.mode, self.origin_dims)
    }
}

/// Dense 3-mode real tensor, same layout as [`ComplexTensor3`].
#[derive(Clone, Debug, PartialEq)]
pub struct RealTensor3 {
    dims: Dims3,
    data: Vec<f64>,
}

impl RealTensor3 {
    pub fn from_vec(dims: Dims3, data: Vec<f64>) -> Result<Self> {
        check_dims(dims)?;
        if data.len() != dims.iter().product::<usize>() {
            return Err(Error::ShapeMismatch(format!(
                "{} entries supplied for dims {dims:?}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite entry".into()));
        }
        Ok(Self { dims, data })
    }

    pub fn filled(dims: Dims3, value: f64) -> Result<Self> {
        Self::from_vec(dims, vec![value; dims.iter().product()])
    }

    pub fn dims(&self) -> Dims3 {
        self.dims
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }
}
