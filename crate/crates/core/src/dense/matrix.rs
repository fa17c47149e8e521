use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Physical storage order of a [`Matrix`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Layout {
    RowMajor,
    ColMajor,
}

impl Layout {
    pub fn flipped(self) -> Layout {
        match self {
            Layout::RowMajor => Layout::ColMajor,
            Layout::ColMajor => Layout::RowMajor,
        }
    }
}

/// Dense `rows × cols` matrix over a contiguous buffer with an explicit layout tag.
///
/// Element `(i, j)` lives at `i * cols + j` in row-major storage and at
/// `i + j * rows` in column-major storage. There is no padding.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    layout: Layout,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize, layout: Layout) -> Self {
        Matrix {
            rows,
            cols,
            layout,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize, layout: Layout) -> Self {
        let mut m = Self::zeros(n, n, layout);
        for i in 0..n {
            m.set(i, i, T::one());
        }
        m
    }

    /// Wraps an existing buffer laid out according to `layout`.
    pub fn from_vec(rows: usize, cols: usize, layout: Layout, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::shape(
                "Matrix::from_vec",
                format!("{} elements", rows * cols),
                format!("{} elements", data.len()),
            ));
        }
        Ok(Matrix {
            rows,
            cols,
            layout,
            data,
        })
    }

    /// Builds a row-major matrix from nested rows. Panics on ragged input.
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Self {
        let ncols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * ncols);
        for r in rows {
            assert_eq!(r.as_ref().len(), ncols, "ragged rows");
            data.extend_from_slice(r.as_ref());
        }
        Matrix {
            rows: rows.len(),
            cols: ncols,
            layout: Layout::RowMajor,
            data,
        }
    }

    pub fn from_fn(
        rows: usize,
        cols: usize,
        layout: Layout,
        mut f: impl FnMut(usize, usize) -> T,
    ) -> Self {
        let mut m = Self::zeros(rows, cols, layout);
        for i in 0..rows {
            for j in 0..cols {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// A `len × 1` matrix. Vectors are layout-invariant, so the tag only
    /// matters to callers that check it.
    pub fn column(data: Vec<T>, layout: Layout) -> Self {
        Matrix {
            rows: data.len(),
            cols: 1,
            layout,
            data,
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
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn layout(&self) -> Layout {
        self.layout
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    /// Strides `(row_stride, col_stride)` into the buffer.
    #[inline]
    pub fn strides(&self) -> (usize, usize) {
        match self.layout {
            Layout::RowMajor => (self.cols, 1),
            Layout::ColMajor => (1, self.rows),
        }
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.rows && j < self.cols);
        match self.layout {
            Layout::RowMajor => i * self.cols + j,
            Layout::ColMajor => i + j * self.rows,
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[self.index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        let idx = self.index(i, j);
        self.data[idx] = v;
    }

    /// Row `i` as a slice; row-major only.
    pub fn row(&self, i: usize) -> &[T] {
        assert_eq!(self.layout, Layout::RowMajor);
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Column `j` as a slice; column-major only.
    pub fn col(&self, j: usize) -> &[T] {
        assert_eq!(self.layout, Layout::ColMajor);
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn col_mut(&mut self, j: usize) -> &mut [T] {
        assert_eq!(self.layout, Layout::ColMajor);
        let r = self.rows;
        &mut self.data[j * r..(j + 1) * r]
    }

    /// Logical transpose without touching the buffer: a row-major `m × n`
    /// matrix is reinterpreted as a column-major `n × m` one and vice versa.
    pub fn into_transpose(self) -> Self {
        Matrix {
            rows: self.cols,
            cols: self.rows,
            layout: self.layout.flipped(),
            data: self.data,
        }
    }

    /// Same logical matrix in `target` storage order. Returns `self`
    /// untouched when it is already there.
    pub fn into_layout(self, target: Layout) -> Self {
        transpose_to_layout(self, target).0
    }

    pub fn to_layout(&self, target: Layout) -> Self {
        if self.layout == target {
            return self.clone();
        }
        let data = transpose_buffer(&self.data, self.rows, self.cols, self.layout);
        Matrix {
            rows: self.rows,
            cols: self.cols,
            layout: target,
            data,
        }
    }

    /// Explicit transpose `Aᵀ` in the same layout as `self`.
    pub fn transpose(&self) -> Self {
        self.clone().into_transpose().into_layout(self.layout)
    }

    pub fn frobenius_norm(&self) -> T {
        norm2(&self.data)
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    pub fn scale_in_place(&mut self, alpha: T) {
        self.data.par_iter_mut().for_each(|v| *v *= alpha);
    }

    /// Sub-matrix of contiguous rows `start..end`, same layout.
    pub fn row_block(&self, start: usize, end: usize) -> Self {
        assert!(start <= end && end <= self.rows);
        let rows = end - start;
        match self.layout {
            Layout::RowMajor => Matrix {
                rows,
                cols: self.cols,
                layout: Layout::RowMajor,
                data: self.data[start * self.cols..end * self.cols].to_vec(),
            },
            Layout::ColMajor => {
                let mut data = Vec::with_capacity(rows * self.cols);
                for j in 0..self.cols {
                    data.extend_from_slice(&self.col(j)[start..end]);
                }
                Matrix {
                    rows,
                    cols: self.cols,
                    layout: Layout::ColMajor,
                    data,
                }
            }
        }
    }

    /// Leading `cols` columns, same layout.
    pub fn leading_columns(&self, cols: usize) -> Self {
        assert!(cols <= self.cols);
        Matrix::from_fn(self.rows, cols, self.layout, |i, j| self.get(i, j))
    }

    /// `‖self − other‖_F`, comparing logical entries across layouts.
    pub fn diff_norm(&self, other: &Self) -> T {
        assert_eq!(self.shape(), other.shape());
        if self.layout == other.layout {
            return self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum::<T>()
                .sqrt();
        }
        let mut acc = T::zero();
        for i in 0..self.rows {
            for j in 0..self.cols {
                let d = self.get(i, j) - other.get(i, j);
                acc += d * d;
            }
        }
        acc.sqrt()
    }

    /// `‖self − other‖_F / ‖other‖_F` (absolute when `other` is zero).
    pub fn rel_diff(&self, other: &Self) -> T {
        let denom = other.frobenius_norm();
        let diff = self.diff_norm(other);
        if denom == T::zero() {
            diff
        } else {
            diff / denom
        }
    }
}

impl<T: Real> fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} {:?}", self.rows, self.cols, self.layout)?;
        let show_rows = self.rows.min(8);
        let show_cols = self.cols.min(8);
        for i in 0..show_rows {
            write!(f, "  [")?;
            for j in 0..show_cols {
                write!(f, " {:>12.5e}", self.get(i, j))?;
            }
            if show_cols < self.cols {
                write!(f, " ...")?;
            }
            writeln!(f, " ]")?;
        }
        if show_rows < self.rows {
            writeln!(f, "  ...")?;
        }
        Ok(())
    }
}

const TILE: usize = 32;

/// Transposes the storage of a `rows × cols` matrix stored in `from` order
/// into the opposite order. Tiled so both sides stay cache friendly.
fn transpose_buffer<T: Real>(src: &[T], rows: usize, cols: usize, from: Layout) -> Vec<T> {
    // View the source as an `outer × inner` row-major array and write its transpose.
    let (outer, inner) = match from {
        Layout::RowMajor => (rows, cols),
        Layout::ColMajor => (cols, rows),
    };
    let mut dst = vec![T::zero(); src.len()];
    if src.is_empty() {
        return dst;
    }
    // dst is `inner × outer` row-major; parallelize over bands of dst rows.
    dst.par_chunks_mut(TILE * outer)
        .enumerate()
        .for_each(|(band, chunk)| {
            let j0 = band * TILE;
            let j1 = (j0 + TILE).min(inner);
            for i0 in (0..outer).step_by(TILE) {
                let i1 = (i0 + TILE).min(outer);
                for j in j0..j1 {
                    let out = &mut chunk[(j - j0) * outer..(j - j0 + 1) * outer];
                    for i in i0..i1 {
                        out[i] = src[i * inner + j];
                    }
                }
            }
        });
    dst
}

/// Converts `a` to `target` storage order.
///
/// Returns the converted matrix and the number of elements copied, which is
/// zero when `a` is already in `target` order (the buffer is reused).
pub fn transpose_to_layout<T: Real>(a: Matrix<T>, target: Layout) -> (Matrix<T>, usize) {
    if a.layout == target {
        return (a, 0);
    }
    // Vectors are layout invariant: only the tag changes.
    if a.rows == 1 || a.cols == 1 {
        return (
            Matrix {
                layout: target,
                ..a
            },
            0,
        );
    }
    let data = transpose_buffer(&a.data, a.rows, a.cols, a.layout);
    let copied = data.len();
    (
        Matrix {
            rows: a.rows,
            cols: a.cols,
            layout: target,
            data,
        },
        copied,
    )
}

/// Euclidean norm with scaling to avoid overflow and underflow.
pub fn norm2<T: Real>(x: &[T]) -> T {
    let scale = x.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if scale == T::zero() || !scale.is_finite() {
        return scale;
    }
    let inv = T::one() / scale;
    let ss: T = x.iter().map(|&v| (v * inv) * (v * inv)).sum();
    scale * ss.sqrt()
}

pub fn dot<T: Real>(x: &[T], y: &[T]) -> T {
    assert_eq!(x.len(), y.len());
    x.iter().zip(y).map(|(&a, &b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transpose_to_col_major_storage_order() {
        let a = Matrix::<f64>::from_rows(&[[1.0, 2.0], [3.0, 4.0]]);
        let (b, copied) = transpose_to_layout(a, Layout::ColMajor);
        assert_eq!(b.as_slice(), &[1.0, 3.0, 2.0, 4.0]);
        assert_eq!(copied, 4);
        assert_eq!(b.get(0, 1), 2.0);
    }

    #[test]
    fn already_in_layout_copies_nothing() {
        let a = Matrix::<f64>::from_vec(2, 2, Layout::ColMajor, vec![1.0, 3.0, 2.0, 4.0]).unwrap();
        let ptr = a.as_slice().as_ptr();
        let (b, copied) = transpose_to_layout(a, Layout::ColMajor);
        assert_eq!(copied, 0);
        assert_eq!(b.as_slice().as_ptr(), ptr);
        assert_eq!(b.as_slice(), &[1.0, 3.0, 2.0, 4.0]);
    }

    #[test]
    fn column_vectors_are_layout_invariant() {
        let a = Matrix::<f64>::column(vec![1.0, 2.0, 3.0], Layout::RowMajor);
        let (b, copied) = transpose_to_layout(a.clone(), Layout::ColMajor);
        assert_eq!(copied, 0);
        assert_eq!(b.as_slice(), a.as_slice());
        assert_eq!(b.layout(), Layout::ColMajor);
    }

    #[test]
    fn transpose_is_an_involution_on_ragged_tiles() {
        let a = Matrix::<f64>::from_fn(67, 45, Layout::RowMajor, |i, j| {
            (i * 1000 + j) as f64 * 0.37
        });
        let (b, _) = transpose_to_layout(a.clone(), Layout::ColMajor);
        for i in 0..67 {
            for j in 0..45 {
                assert_eq!(a.get(i, j), b.get(i, j));
            }
        }
        let (c, _) = transpose_to_layout(b, Layout::RowMajor);
        assert_eq!(c.as_slice(), a.as_slice());
    }

    #[test]
    fn into_transpose_is_free() {
        let a = Matrix::<f64>::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]);
        let t = a.clone().into_transpose();
        assert_eq!(t.shape(), (3, 2));
        assert_eq!(t.layout(), Layout::ColMajor);
        assert_eq!(t.get(2, 1), 6.0);
        assert_eq!(a.transpose().get(2, 0), 3.0);
        assert_eq!(a.transpose().layout(), Layout::RowMajor);
    }

    #[test]
    fn norm2_handles_extreme_scales() {
        assert_eq!(norm2(&[3.0f64, 4.0]), 5.0);
        let big = norm2(&[3e200f64, 4e200]);
        assert!((big / 5e200 - 1.0).abs() < 1e-15);
        assert_eq!(norm2::<f64>(&[]), 0.0);
    }

    #[test]
    fn from_vec_rejects_wrong_length() {
        assert!(Matrix::<f64>::from_vec(2, 3, Layout::RowMajor, vec![0.0; 5]).is_err());
    }
}
