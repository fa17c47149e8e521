//! Jacobi methods for small dense problems: eigenvalues of symmetric
//! matrices and singular values of tall matrices.

use super::matrix::{norm2, Matrix};
use super::qr::HouseholderQr;
use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_SWEEPS: usize = 80;
const SYMMETRY_TOL: f64 = 1e-12;

/// All eigenvalues of a symmetric matrix, in descending order, by cyclic
/// Jacobi rotations.
///
/// A rotation is applied whenever `|a_pq| > ε·√|a_pp·a_qq|`; iteration stops
/// after a sweep with no rotation, so off-diagonal mass ends far below the
/// 1e-13 relative level.
pub fn sym_eigenvalues<T: Real>(g: &Matrix<T>) -> Result<Vec<T>> {
    let n = g.rows();
    if g.cols() != n {
        return Err(Error::shape(
            "sym_eigenvalues",
            "square matrix",
            format!("{}×{}", n, g.cols()),
        ));
    }
    let scale = g.max_abs();
    let mut asym = T::zero();
    for i in 0..n {
        for j in i + 1..n {
            asym = asym.max((g.get(i, j) - g.get(j, i)).abs());
        }
    }
    if asym > T::lit(SYMMETRY_TOL) * scale {
        return Err(Error::NotSymmetric {
            asymmetry: (asym / scale).as_f64(),
        });
    }

    let mut a: Vec<T> = (0..n * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            (g.get(i, j) + g.get(j, i)) * T::lit(0.5)
        })
        .collect();
    let eps = T::epsilon();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                if apq == T::zero() || apq.abs() <= eps * (app * aqq).abs().sqrt() {
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (T::lit(2.0) * apq);
                let t = theta.signum() / (theta.abs() + (T::one() + theta * theta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = T::zero();
                a[q * n + p] = T::zero();
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let arp = a[r * n + p];
                    let arq = a[r * n + q];
                    let np = c * arp - s * arq;
                    let nq = s * arp + c * arq;
                    a[r * n + p] = np;
                    a[p * n + r] = np;
                    a[r * n + q] = nq;
                    a[q * n + r] = nq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut eig: Vec<T> = (0..n).map(|i| a[i * n + i]).collect();
    eig.sort_by(|x, y| y.partial_cmp(x).expect("finite eigenvalues"));
    Ok(eig)
}

/// Singular values of a `rows × cols` matrix (`rows ≥ cols`), descending.
///
/// Householder QR reduces the problem to the triangular factor, whose
/// columns are then orthogonalized by one-sided Jacobi. Both stages are
/// backward stable, so each singular value carries an absolute error of
/// order `u·‖A‖` and small singular values of ill-conditioned inputs stay
/// meaningful (unlike square roots of Gram eigenvalues).
pub fn singular_values<T: Real>(a: &Matrix<T>) -> Result<Vec<T>> {
    let r = HouseholderQr::new(a)?.r();
    let n = r.cols();
    let mut cols: Vec<Vec<T>> = (0..n).map(|j| r.col(j).to_vec()).collect();
    let eps = T::epsilon();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha: T = cols[p].iter().map(|&v| v * v).sum();
                let beta: T = cols[q].iter().map(|&v| v * v).sum();
                let gamma: T = cols[p].iter().zip(&cols[q]).map(|(&x, &y)| x * y).sum();
                if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                let (lo, hi) = cols.split_at_mut(q);
                for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
                    let xv = *x;
                    let yv = *y;
                    *x = c * xv - s * yv;
                    *y = s * xv + c * yv;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<T> = cols.iter().map(|c| norm2(c)).collect();
    sv.sort_by(|x, y| y.partial_cmp(x).expect("finite singular values"));
    Ok(sv)
}

/// Ratio of extreme singular values.
pub fn condition_number<T: Real>(a: &Matrix<T>) -> Result<T> {
    let sv = singular_values(a)?;
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) => Ok(hi / lo),
        _ => Ok(T::one()),
    }
}
