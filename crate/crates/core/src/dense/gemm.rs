//! Blocked, packed GEMM and GEMV.
//!
//! The product is accumulated into a row-major scratch buffer split into
//! `MC`-row blocks; when there are too few row blocks to keep workers busy the
//! inner dimension is also split into fixed `KSPLIT` chunks whose partial
//! products are reduced in chunk order. Both partitions depend only on the
//! operand shapes, so results are bitwise identical for any thread count.

use rayon::prelude::*;

use super::matrix::{Layout, Matrix};
use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transpose {
    No,
    Yes,
}

const MR: usize = 4;
const NR: usize = 8;
const KC: usize = 256;
const NC: usize = 512;
const MC: usize = 64;
const KSPLIT: usize = 8192;
const MIN_ROW_BLOCKS: usize = 16;

/// Strided read-only view of `op(X)`.
#[derive(Clone, Copy)]
struct View<'a, T> {
    data: &'a [T],
    rows: usize,
    cols: usize,
    rs: usize,
    cs: usize,
}

impl<'a, T: Real> View<'a, T> {
    fn new(m: &'a Matrix<T>, t: Transpose) -> Self {
        let (rs, cs) = m.strides();
        match t {
            Transpose::No => View {
                data: m.as_slice(),
                rows: m.rows(),
                cols: m.cols(),
                rs,
                cs,
            },
            Transpose::Yes => View {
                data: m.as_slice(),
                rows: m.cols(),
                cols: m.rows(),
                rs: cs,
                cs: rs,
            },
        }
    }

    #[inline(always)]
    fn at(&self, i: usize, j: usize) -> T {
        self.data[i * self.rs + j * self.cs]
    }
}

/// `C ← alpha·op(A)·op(B) + beta·C`. `C` keeps its layout; inputs are untouched.
pub fn gemm<T: Real>(
    alpha: T,
    a: &Matrix<T>,
    trans_a: Transpose,
    b: &Matrix<T>,
    trans_b: Transpose,
    beta: T,
    c: &mut Matrix<T>,
) -> Result<()> {
    let av = View::new(a, trans_a);
    let bv = View::new(b, trans_b);
    if av.cols != bv.rows || c.rows() != av.rows || c.cols() != bv.cols {
        return Err(Error::shape(
            "gemm",
            "op(A) m×k, op(B) k×n, C m×n",
            format!(
                "op(A) {}×{}, op(B) {}×{}, C {}×{}",
                av.rows,
                av.cols,
                bv.rows,
                bv.cols,
                c.rows(),
                c.cols()
            ),
        ));
    }
    let product = product_row_major(av, bv);
    combine(alpha, &product, beta, c);
    Ok(())
}

/// `op(A)·op(B)` into a fresh matrix of the requested layout.
pub fn matmul<T: Real>(
    a: &Matrix<T>,
    trans_a: Transpose,
    b: &Matrix<T>,
    trans_b: Transpose,
    layout: Layout,
) -> Result<Matrix<T>> {
    let m = match trans_a {
        Transpose::No => a.rows(),
        Transpose::Yes => a.cols(),
    };
    let n = match trans_b {
        Transpose::No => b.cols(),
        Transpose::Yes => b.rows(),
    };
    let mut c = Matrix::zeros(m, n, layout);
    gemm(T::one(), a, trans_a, b, trans_b, T::zero(), &mut c)?;
    Ok(c)
}

fn combine<T: Real>(alpha: T, p: &[T], beta: T, c: &mut Matrix<T>) {
    let (m, n) = c.shape();
    if m == 0 || n == 0 {
        return;
    }
    let layout = c.layout();
    let blend = |out: &mut T, v: T| {
        *out = if beta == T::zero() {
            alpha * v
        } else {
            alpha * v + beta * *out
        };
    };
    match layout {
        Layout::RowMajor => c
            .as_mut_slice()
            .par_chunks_mut(n)
            .zip(p.par_chunks(n))
            .for_each(|(crow, prow)| {
                for (o, &v) in crow.iter_mut().zip(prow) {
                    blend(o, v);
                }
            }),
        Layout::ColMajor => c
            .as_mut_slice()
            .par_chunks_mut(m)
            .enumerate()
            .for_each(|(j, ccol)| {
                for (i, o) in ccol.iter_mut().enumerate() {
                    blend(o, p[i * n + j]);
                }
            }),
    }
}

fn product_row_major<T: Real>(a: View<'_, T>, b: View<'_, T>) -> Vec<T> {
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let mut out = vec![T::zero(); m * n];
    if m == 0 || n == 0 || k == 0 {
        return out;
    }
    let row_blocks = m.div_ceil(MC);
    let ksplit = if row_blocks >= MIN_ROW_BLOCKS {
        k
    } else {
        KSPLIT
    };
    let kchunks = k.div_ceil(ksplit);
    let simd = wide_kernel_available();

    if kchunks == 1 {
        out.par_chunks_mut(MC * n)
            .enumerate()
            .for_each(|(blk, dst)| {
                let i0 = blk * MC;
                let i1 = (i0 + MC).min(m);
                block_product(a, b, i0, i1, 0, k, dst, simd);
            });
        return out;
    }

    out.par_chunks_mut(MC * n)
        .enumerate()
        .for_each(|(blk, dst)| {
            let i0 = blk * MC;
            let i1 = (i0 + MC).min(m);
            let partials: Vec<Vec<T>> = (0..kchunks)
                .into_par_iter()
                .map(|c| {
                    let p0 = c * ksplit;
                    let p1 = (p0 + ksplit).min(k);
                    let mut part = vec![T::zero(); (i1 - i0) * n];
                    block_product(a, b, i0, i1, p0, p1, &mut part, simd);
                    part
                })
                .collect();
            for part in &partials {
                for (d, &v) in dst.iter_mut().zip(part) {
                    *d += v;
                }
            }
        });
    out
}

#[cfg(target_arch = "x86_64")]
fn wide_kernel_available() -> bool {
    std::arch::is_x86_feature_detected!("avx2")
}

#[cfg(not(target_arch = "x86_64"))]
fn wide_kernel_available() -> bool {
    false
}

/// Accumulates rows `i0..i1` of `A[:, p0..p1]·B[p0..p1, :]` into `dst`
/// (row-major, width `b.cols`).
#[allow(clippy::too_many_arguments)]
fn block_product<T: Real>(
    a: View<'_, T>,
    b: View<'_, T>,
    i0: usize,
    i1: usize,
    p0: usize,
    p1: usize,
    dst: &mut [T],
    simd: bool,
) {
    let n = b.cols;
    let mb = i1 - i0;
    let mpanels = mb.div_ceil(MR);
    let mut apack = vec![T::zero(); mpanels * MR * KC];
    let mut bpack = vec![T::zero(); NC.div_ceil(NR) * NR * KC];

    for pc in (p0..p1).step_by(KC) {
        let kc = (pc + KC).min(p1) - pc;
        pack_a(a, i0, mb, pc, kc, &mut apack);
        for jc in (0..n).step_by(NC) {
            let nc = (jc + NC).min(n) - jc;
            pack_b(b, pc, kc, jc, nc, &mut bpack);
            for jp in 0..nc.div_ceil(NR) {
                let bp = &bpack[jp * NR * kc..(jp + 1) * NR * kc];
                let j = jc + jp * NR;
                let nr = NR.min(n - j);
                for ip in 0..mpanels {
                    let ap = &apack[ip * MR * kc..(ip + 1) * MR * kc];
                    let mut acc = [[T::zero(); NR]; MR];
                    micro_kernel(kc, ap, bp, &mut acc, simd);
                    let r0 = ip * MR;
                    let mr = MR.min(mb - r0);
                    for (r, acc_row) in acc.iter().enumerate().take(mr) {
                        let row = &mut dst[(r0 + r) * n + j..(r0 + r) * n + j + nr];
                        for (d, &v) in row.iter_mut().zip(acc_row) {
                            *d += v;
                        }
                    }
                }
            }
        }
    }
}

fn pack_a<T: Real>(a: View<'_, T>, i0: usize, mb: usize, pc: usize, kc: usize, buf: &mut [T]) {
    for ip in 0..mb.div_ceil(MR) {
        let panel = &mut buf[ip * MR * kc..(ip + 1) * MR * kc];
        let r0 = ip * MR;
        let mr = MR.min(mb - r0);
        for p in 0..kc {
            let dst = &mut panel[p * MR..(p + 1) * MR];
            for (r, d) in dst.iter_mut().enumerate() {
                *d = if r < mr {
                    a.at(i0 + r0 + r, pc + p)
                } else {
                    T::zero()
                };
            }
        }
    }
}

fn pack_b<T: Real>(b: View<'_, T>, pc: usize, kc: usize, jc: usize, nc: usize, buf: &mut [T]) {
    for jp in 0..nc.div_ceil(NR) {
        let panel = &mut buf[jp * NR * kc..(jp + 1) * NR * kc];
        let c0 = jp * NR;
        let nr = NR.min(nc - c0);
        for p in 0..kc {
            let dst = &mut panel[p * NR..(p + 1) * NR];
            for (c, d) in dst.iter_mut().enumerate() {
                *d = if c < nr {
                    b.at(pc + p, jc + c0 + c)
                } else {
                    T::zero()
                };
            }
        }
    }
}

#[inline(always)]
fn kernel_body<T: Real>(kc: usize, a: &[T], b: &[T], acc: &mut [[T; NR]; MR]) {
    for p in 0..kc {
        let ap: &[T; MR] = a[p * MR..(p + 1) * MR].try_into().unwrap();
        let bp: &[T; NR] = b[p * NR..(p + 1) * NR].try_into().unwrap();
        for r in 0..MR {
            for c in 0..NR {
                acc[r][c] += ap[r] * bp[c];
            }
        }
    }
}

// Same operations as `kernel_body` (separate multiply and add, no FMA), only
// wider registers, so both paths produce identical bits.
#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn kernel_avx2<T: Real>(kc: usize, a: &[T], b: &[T], acc: &mut [[T; NR]; MR]) {
    kernel_body(kc, a, b, acc)
}

#[inline]
fn micro_kernel<T: Real>(kc: usize, a: &[T], b: &[T], acc: &mut [[T; NR]; MR], simd: bool) {
    #[cfg(target_arch = "x86_64")]
    if simd {
        // SAFETY: `simd` is only true when AVX2 was detected at runtime.
        unsafe { kernel_avx2(kc, a, b, acc) };
        return;
    }
    let _ = simd;
    kernel_body(kc, a, b, acc)
}

/// `y ← alpha·op(A)·x + beta·y`.
pub fn gemv<T: Real>(
    alpha: T,
    a: &Matrix<T>,
    trans: Transpose,
    x: &[T],
    beta: T,
    y: &mut [T],
) -> Result<()> {
    let av = View::new(a, trans);
    if av.cols != x.len() || av.rows != y.len() {
        return Err(Error::shape(
            "gemv",
            format!("op(A) {}×{}", y.len(), x.len()),
            format!("op(A) {}×{}", av.rows, av.cols),
        ));
    }
    let blend = |yi: &mut T, v: T| {
        *yi = if beta == T::zero() {
            alpha * v
        } else {
            alpha * v + beta * *yi
        };
    };
    if av.cs == 1 {
        // Logical rows are contiguous: one dot product per output.
        y.par_iter_mut().enumerate().for_each(|(i, yi)| {
            let row = &av.data[i * av.rs..i * av.rs + av.cols];
            let s: T = row.iter().zip(x).map(|(&r, &v)| r * v).sum();
            blend(yi, s);
        });
        return Ok(());
    }
    // Logical columns are contiguous: axpy over fixed chunks of the inner
    // dimension, then reduce partials in chunk order.
    const CHUNK: usize = 4096;
    let m = av.rows;
    let partials: Vec<Vec<T>> = x
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(c, xc)| {
            let mut acc = vec![T::zero(); m];
            for (off, &xv) in xc.iter().enumerate() {
                let p = c * CHUNK + off;
                let col = &av.data[p * av.cs..p * av.cs + m];
                for (s, &v) in acc.iter_mut().zip(col) {
                    *s += v * xv;
                }
            }
            acc
        })
        .collect();
    let mut total = vec![T::zero(); m];
    for part in &partials {
        for (t, &v) in total.iter_mut().zip(part) {
            *t += v;
        }
    }
    for (yi, v) in y.iter_mut().zip(total) {
        blend(yi, v);
    }
    Ok(())
}

/// `op(A)·x` into a fresh vector.
pub fn matvec<T: Real>(a: &Matrix<T>, trans: Transpose, x: &[T]) -> Result<Vec<T>> {
    let m = match trans {
        Transpose::No => a.rows(),
        Transpose::Yes => a.cols(),
    };
    let mut y = vec![T::zero(); m];
    gemv(T::one(), a, trans, x, T::zero(), &mut y)?;
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive(a: &Matrix<f64>, ta: Transpose, b: &Matrix<f64>, tb: Transpose) -> Matrix<f64> {
        let get = |m: &Matrix<f64>, t: Transpose, i: usize, j: usize| match t {
            Transpose::No => m.get(i, j),
            Transpose::Yes => m.get(j, i),
        };
        let (m, k) = match ta {
            Transpose::No => a.shape(),
            Transpose::Yes => (a.cols(), a.rows()),
        };
        let n = match tb {
            Transpose::No => b.cols(),
            Transpose::Yes => b.rows(),
        };
        Matrix::from_fn(m, n, Layout::RowMajor, |i, j| {
            (0..k).map(|p| get(a, ta, i, p) * get(b, tb, p, j)).sum()
        })
    }

    #[test]
    fn identity_times_b() {
        let a = Matrix::<f64>::identity(2, Layout::RowMajor);
        let b = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]);
        let c = matmul(&a, Transpose::No, &b, Transpose::No, Layout::RowMajor).unwrap();
        assert_eq!(c, b);
    }

    #[test]
    fn transposed_a_times_identity() {
        let a = Matrix::<f64>::from_rows(&[[1.0, 2.0], [3.0, 4.0]]);
        let b = Matrix::identity(2, Layout::ColMajor);
        let c = matmul(&a, Transpose::Yes, &b, Transpose::No, Layout::RowMajor).unwrap();
        assert_eq!(c, Matrix::from_rows(&[[1.0, 3.0], [2.0, 4.0]]));
    }

    #[test]
    fn row_times_column() {
        let a = Matrix::<f64>::from_rows(&[[1.0, 1.0]]);
        let b = Matrix::from_rows(&[[2.0], [5.0]]);
        let c = matmul(&a, Transpose::No, &b, Transpose::No, Layout::ColMajor).unwrap();
        assert_eq!(c.as_slice(), &[7.0]);
    }

    #[test]
    fn alpha_beta_blend() {
        let a = Matrix::<f64>::from_rows(&[[1.0, 2.0], [3.0, 4.0]]);
        let b = Matrix::identity(2, Layout::RowMajor);
        let mut c = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]);
        gemm(2.0, &a, Transpose::No, &b, Transpose::No, -1.0, &mut c).unwrap();
        assert_eq!(c, Matrix::from_rows(&[[1.0, 3.0], [5.0, 7.0]]));
    }

    #[test]
    fn beta_zero_ignores_nan_in_c() {
        let a = Matrix::<f64>::identity(2, Layout::RowMajor);
        let mut c = Matrix::from_rows(&[[f64::NAN, 0.0], [0.0, 0.0]]);
        gemm(1.0, &a, Transpose::No, &a, Transpose::No, 0.0, &mut c).unwrap();
        assert_eq!(c, Matrix::identity(2, Layout::RowMajor));
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let a = Matrix::<f64>::zeros(2, 3, Layout::RowMajor);
        let b = Matrix::<f64>::zeros(2, 3, Layout::RowMajor);
        let mut c = Matrix::zeros(2, 3, Layout::RowMajor);
        assert!(matches!(
            gemm(1.0, &a, Transpose::No, &b, Transpose::No, 0.0, &mut c),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn split_k_matches_naive_on_tall_inner_dimension() {
        // k = 20000 > KSPLIT with only one row block forces the split path.
        let k = 20_000;
        let a = Matrix::<f64>::from_fn(k, 5, Layout::RowMajor, |i, j| {
            ((i * 7 + j * 3) % 11) as f64 - 5.0
        });
        let b = Matrix::<f64>::from_fn(k, 9, Layout::ColMajor, |i, j| {
            ((i * 5 + j) % 13) as f64 - 6.0
        });
        let c = matmul(&a, Transpose::Yes, &b, Transpose::No, Layout::ColMajor).unwrap();
        // Integer entries: every partial sum is exact, so equality is exact.
        assert_eq!(
            c.diff_norm(&naive(&a, Transpose::Yes, &b, Transpose::No)),
            0.0
        );
    }

    #[test]
    fn gemv_both_orientations() {
        let a = Matrix::<f64>::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]);
        assert_eq!(
            matvec(&a, Transpose::No, &[1.0, 0.0, -1.0]).unwrap(),
            vec![-2.0, -2.0]
        );
        assert_eq!(
            matvec(&a, Transpose::Yes, &[1.0, 1.0]).unwrap(),
            vec![5.0, 7.0, 9.0]
        );
        let ac = a.to_layout(Layout::ColMajor);
        assert_eq!(
            matvec(&ac, Transpose::No, &[1.0, 0.0, -1.0]).unwrap(),
            vec![-2.0, -2.0]
        );
        assert_eq!(
            matvec(&ac, Transpose::Yes, &[1.0, 1.0]).unwrap(),
            vec![5.0, 7.0, 9.0]
        );
    }

    #[test]
    fn f32_path() {
        let a = Matrix::<f32>::from_rows(&[[1.0, 2.0], [3.0, 4.0]]);
        let c = matmul(&a, Transpose::No, &a, Transpose::Yes, Layout::RowMajor).unwrap();
        assert_eq!(c, Matrix::from_rows(&[[5.0, 11.0], [11.0, 25.0]]));
    }
}
