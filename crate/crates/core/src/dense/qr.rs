//! Householder QR in LAPACK storage: reflectors below the diagonal, `R` on and
//! above it, scalar factors in `tau`. Panels of `NB` columns are factored
//! with level-2 updates and applied to the trailing matrix in compact WY form
//! through GEMM.
//!
//! Reflectors are chosen so every diagonal entry of `R` is nonnegative, which
//! makes the economy factorization unique for full-rank input.

use rayon::prelude::*;

use super::gemm::{matmul, Transpose};
use super::matrix::{norm2, Layout, Matrix};
use crate::error::{Error, Result};
use crate::scalar::Real;

const NB: usize = 32;
const PAR_ROWS: usize = 1 << 14;

/// Compact Householder factorization of a tall matrix.
#[derive(Debug, Clone)]
pub struct HouseholderQr<T: Real> {
    factors: Matrix<T>,
    tau: Vec<T>,
}

/// Economy QR: `Q` is `rows × cols` with orthonormal columns, `R` is upper
/// triangular with a nonnegative diagonal. Both are returned column-major.
pub fn householder_qr_economy<T: Real>(a: &Matrix<T>) -> Result<(Matrix<T>, Matrix<T>)> {
    let qr = HouseholderQr::new(a)?;
    Ok((qr.q(), qr.r()))
}

impl<T: Real> HouseholderQr<T> {
    pub fn new(a: &Matrix<T>) -> Result<Self> {
        let (m, n) = a.shape();
        if m < n {
            return Err(Error::shape(
                "householder_qr",
                "rows >= cols",
                format!("{m}×{n}"),
            ));
        }
        let mut f = a.to_layout(Layout::ColMajor);
        let mut tau = vec![T::zero(); n];
        let mut j0 = 0;
        while j0 < n {
            let nb = NB.min(n - j0);
            factor_panel(&mut f, j0, nb, &mut tau);
            if j0 + nb < n {
                let v = reflector_block(&f, j0, nb);
                let t = triangular_factor(&v, &tau[j0..j0 + nb]);
                apply_block(&mut f, j0, j0 + nb, n, &v, &t, Transpose::Yes);
            }
            j0 += nb;
        }
        Ok(HouseholderQr { factors: f, tau })
    }

    pub fn rows(&self) -> usize {
        self.factors.rows()
    }

    pub fn cols(&self) -> usize {
        self.factors.cols()
    }

    /// Upper-triangular `cols × cols` factor, column-major.
    pub fn r(&self) -> Matrix<T> {
        let n = self.cols();
        Matrix::from_fn(n, n, Layout::ColMajor, |i, j| {
            if i <= j {
                self.factors.get(i, j)
            } else {
                T::zero()
            }
        })
    }

    /// Diagonal of `R`.
    pub fn r_diagonal(&self) -> Vec<T> {
        (0..self.cols()).map(|i| self.factors.get(i, i)).collect()
    }

    /// Explicit economy `Q` (`rows × cols`, column-major).
    pub fn q(&self) -> Matrix<T> {
        let (m, n) = self.factors.shape();
        let mut q = Matrix::zeros(m, n, Layout::ColMajor);
        for i in 0..n {
            q.set(i, i, T::one());
        }
        let starts: Vec<usize> = (0..n).step_by(NB).collect();
        for &j0 in starts.iter().rev() {
            let nb = NB.min(n - j0);
            let v = reflector_block(&self.factors, j0, nb);
            let t = triangular_factor(&v, &self.tau[j0..j0 + nb]);
            apply_block(&mut q, j0, j0, n, &v, &t, Transpose::No);
        }
        q
    }

    /// Overwrites `b` (length `rows`) with `Qᵀb` using the stored reflectors.
    pub fn apply_qt(&self, b: &mut [T]) {
        let (m, n) = self.factors.shape();
        assert_eq!(b.len(), m, "apply_qt: length mismatch");
        for j in 0..n {
            let tau = self.tau[j];
            if tau == T::zero() {
                continue;
            }
            let col = &self.factors.col(j)[j..];
            let tail = &mut b[j..];
            let mut w = tail[0];
            for (x, v) in tail[1..].iter().zip(&col[1..]) {
                w += *x * *v;
            }
            w *= tau;
            tail[0] -= w;
            for (x, v) in tail[1..].iter_mut().zip(&col[1..]) {
                *x -= w * *v;
            }
        }
    }
}

/// Reflector for `x`: returns `(tau, beta)` and overwrites `x[1..]` with the
/// essential part of `v` (`v[0] = 1` implied) and `x[0]` with `beta ≥ 0`.
fn make_reflector<T: Real>(x: &mut [T]) -> T {
    let alpha = x[0];
    let tail_norm = norm2(&x[1..]);
    if tail_norm == T::zero() {
        if alpha >= T::zero() {
            return T::zero();
        }
        // Pure sign flip: H = I − 2·e1·e1ᵀ.
        x[0] = -alpha;
        return T::lit(2.0);
    }
    let mu = alpha.hypot(tail_norm);
    let sigma = tail_norm * tail_norm;
    // v1 = alpha − mu computed without cancellation when alpha > 0.
    let v1 = if alpha <= T::zero() {
        alpha - mu
    } else {
        -sigma / (alpha + mu)
    };
    let tau = T::lit(2.0) * v1 * v1 / (sigma + v1 * v1);
    let inv = T::one() / v1;
    for v in &mut x[1..] {
        *v *= inv;
    }
    x[0] = mu;
    tau
}

fn factor_panel<T: Real>(f: &mut Matrix<T>, j0: usize, nb: usize, tau: &mut [T]) {
    let m = f.rows();
    for j in j0..j0 + nb {
        let t = make_reflector(&mut f.col_mut(j)[j..]);
        tau[j] = t;
        if t == T::zero() || j + 1 == j0 + nb {
            continue;
        }
        let data = f.as_mut_slice();
        let (head, rest) = data.split_at_mut((j + 1) * m);
        let v = &head[j * m + j..(j + 1) * m];
        let remaining = &mut rest[..(j0 + nb - j - 1) * m];
        let update = |c: &mut [T]| {
            let c = &mut c[j..];
            let mut w = c[0];
            for (x, vv) in c[1..].iter().zip(&v[1..]) {
                w += *x * *vv;
            }
            w *= t;
            c[0] -= w;
            for (x, vv) in c[1..].iter_mut().zip(&v[1..]) {
                *x -= w * *vv;
            }
        };
        if m - j >= PAR_ROWS {
            remaining.par_chunks_mut(m).for_each(update);
        } else {
            remaining.chunks_mut(m).for_each(update);
        }
    }
}

/// Unit lower-trapezoidal reflector block `V` for columns `j0..j0+nb`,
/// covering rows `j0..m`.
fn reflector_block<T: Real>(f: &Matrix<T>, j0: usize, nb: usize) -> Matrix<T> {
    let m = f.rows();
    let mut v = Matrix::zeros(m - j0, nb, Layout::ColMajor);
    for c in 0..nb {
        let src = &f.col(j0 + c)[j0..];
        let dst = v.col_mut(c);
        dst[c] = T::one();
        dst[c + 1..].copy_from_slice(&src[c + 1..]);
    }
    v
}

/// Upper-triangular `T` with `H_1⋯H_nb = I − V·T·Vᵀ` (forward, columnwise).
fn triangular_factor<T: Real>(v: &Matrix<T>, tau: &[T]) -> Matrix<T> {
    let nb = v.cols();
    let gram = matmul(v, Transpose::Yes, v, Transpose::No, Layout::ColMajor).expect("conforming");
    let mut t = Matrix::zeros(nb, nb, Layout::ColMajor);
    for i in 0..nb {
        t.set(i, i, tau[i]);
        // T[0..i, i] = −tau_i · T[0..i, 0..i] · (Vᵀ v_i)[0..i]
        for r in 0..i {
            let mut s = T::zero();
            for c in r..i {
                s += t.get(r, c) * gram.get(c, i);
            }
            t.set(r, i, -tau[i] * s);
        }
    }
    t
}

/// Applies `(I − V·T·Vᵀ)` (or its transpose) to rows `row0..m`, columns
/// `c0..c1` of `target`.
fn apply_block<T: Real>(
    target: &mut Matrix<T>,
    row0: usize,
    c0: usize,
    c1: usize,
    v: &Matrix<T>,
    t: &Matrix<T>,
    trans: Transpose,
) {
    if c0 >= c1 {
        return;
    }
    let m = target.rows();
    let h = m - row0;
    let nc = c1 - c0;
    let mut c = Matrix::zeros(h, nc, Layout::ColMajor);
    for j in 0..nc {
        c.col_mut(j).copy_from_slice(&target.col(c0 + j)[row0..]);
    }
    let w = matmul(v, Transpose::Yes, &c, Transpose::No, Layout::ColMajor).expect("conforming");
    let tw = matmul(t, trans, &w, Transpose::No, Layout::ColMajor).expect("conforming");
    super::gemm::gemm(
        -T::one(),
        v,
        Transpose::No,
        &tw,
        Transpose::No,
        T::one(),
        &mut c,
    )
    .expect("conforming");
    for j in 0..nc {
        target.col_mut(c0 + j)[row0..].copy_from_slice(c.col(j));
    }
}
