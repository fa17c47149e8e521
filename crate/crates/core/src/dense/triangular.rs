//! Cholesky factorization and triangular solves against upper-triangular factors.

use rayon::prelude::*;

use super::gemm::Transpose;
use super::matrix::{Layout, Matrix};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Upper-triangular `R` with `RᵀR = G`. Only the upper triangle of `G` is read.
///
/// A pivot that is not strictly positive (or not finite) yields
/// [`Error::NotPositiveDefinite`]; normal-equations solvers rely on this to
/// detect loss of definiteness in badly conditioned Gram matrices.
pub fn cholesky<T: Real>(g: &Matrix<T>) -> Result<Matrix<T>> {
    let n = g.rows();
    if g.cols() != n {
        return Err(Error::shape(
            "cholesky",
            "square matrix",
            format!("{}×{}", n, g.cols()),
        ));
    }
    // Row-major upper triangle: row i of R is contiguous.
    let mut r = Matrix::zeros(n, n, Layout::RowMajor);
    for i in 0..n {
        for j in i..n {
            r.set(i, j, g.get(i, j));
        }
    }
    let data = r.as_mut_slice();
    for k in 0..n {
        let pivot = data[k * n + k];
        if !(pivot > T::zero()) || !pivot.is_finite() {
            return Err(Error::NotPositiveDefinite {
                index: k,
                pivot: pivot.as_f64(),
            });
        }
        let rkk = pivot.sqrt();
        data[k * n + k] = rkk;
        let inv = T::one() / rkk;
        for v in &mut data[k * n + k + 1..(k + 1) * n] {
            *v *= inv;
        }
        // Trailing update: R[i, j] -= R[k, i]·R[k, j] for k < i ≤ j.
        let (head, tail) = data.split_at_mut((k + 1) * n);
        let rk = &head[k * n..];
        tail.chunks_mut(n).enumerate().for_each(|(off, row)| {
            let i = k + 1 + off;
            let rki = rk[i];
            for j in i..n {
                row[j] -= rki * rk[j];
            }
        });
    }
    Ok(r.into_layout(g.layout()))
}

fn check_triangular<T: Real>(r: &Matrix<T>) -> Result<usize> {
    let n = r.rows();
    if r.cols() != n {
        return Err(Error::shape(
            "tri_solve",
            "square factor",
            format!("{}×{}", n, r.cols()),
        ));
    }
    for i in 0..n {
        if r.get(i, i) == T::zero() {
            return Err(Error::Singular { index: i });
        }
    }
    Ok(n)
}

/// Solves `op(R)·x = b` in place for upper-triangular `R`.
fn solve_in_place<T: Real>(r: &Matrix<T>, trans: Transpose, x: &mut [T]) {
    let n = r.rows();
    match trans {
        Transpose::No => {
            for i in (0..n).rev() {
                let mut s = x[i];
                for j in i + 1..n {
                    s -= r.get(i, j) * x[j];
                }
                x[i] = s / r.get(i, i);
            }
        }
        Transpose::Yes => {
            for i in 0..n {
                let mut s = x[i];
                for j in 0..i {
                    s -= r.get(j, i) * x[j];
                }
                x[i] = s / r.get(i, i);
            }
        }
    }
}

/// `op(R)⁻¹·b` for a single right-hand side.
pub fn tri_solve_vec<T: Real>(r: &Matrix<T>, trans: Transpose, b: &[T]) -> Result<Vec<T>> {
    let n = check_triangular(r)?;
    if b.len() != n {
        return Err(Error::shape(
            "tri_solve",
            format!("rhs of length {n}"),
            b.len(),
        ));
    }
    let mut x = b.to_vec();
    solve_in_place(r, trans, &mut x);
    Ok(x)
}

/// `op(R)⁻¹·B`, one substitution per column of `B`; the result keeps `B`'s layout.
pub fn tri_solve<T: Real>(r: &Matrix<T>, trans: Transpose, b: &Matrix<T>) -> Result<Matrix<T>> {
    let n = check_triangular(r)?;
    if b.rows() != n {
        return Err(Error::shape("tri_solve", format!("{n} rows"), b.rows()));
    }
    let mut x = b.to_layout(Layout::ColMajor);
    x.as_mut_slice()
        .par_chunks_mut(n.max(1))
        .for_each(|col| solve_in_place(r, trans, col));
    Ok(x.into_layout(b.layout()))
}

/// `A·R⁻¹`: each row `a` of `A` is replaced by the `x` solving `x·R = a`
/// (forward substitution with `Rᵀ`). Rows are independent and solved in
/// parallel; the result is row-major.
pub fn tri_solve_right<T: Real>(a: &Matrix<T>, r: &Matrix<T>) -> Result<Matrix<T>> {
    let n = check_triangular(r)?;
    if a.cols() != n {
        return Err(Error::shape(
            "tri_solve_right",
            format!("{n} columns"),
            a.cols(),
        ));
    }
    // Column j of R, rows 0..=j, packed contiguously for the inner loop.
    let rcols: Vec<Vec<T>> = (0..n)
        .map(|j| (0..=j).map(|i| r.get(i, j)).collect())
        .collect();
    let mut x = a.to_layout(Layout::RowMajor);
    if n == 0 {
        return Ok(x);
    }
    x.as_mut_slice().par_chunks_mut(n).for_each(|row| {
        for j in 0..n {
            let col = &rcols[j];
            let mut s = row[j];
            for i in 0..j {
                s -= row[i] * col[i];
            }
            row[j] = s / col[j];
        }
    });
    Ok(x)
}

/// Product of two upper-triangular matrices, itself upper triangular.
pub fn upper_mul<T: Real>(a: &Matrix<T>, b: &Matrix<T>) -> Matrix<T> {
    let n = a.rows();
    assert_eq!(a.shape(), (n, n));
    assert_eq!(b.shape(), (n, n));
    Matrix::from_fn(n, n, Layout::ColMajor, |i, j| {
        if i > j {
            return T::zero();
        }
        let mut s = T::zero();
        for k in i..=j {
            s += a.get(i, k) * b.get(k, j);
        }
        s
    })
}
