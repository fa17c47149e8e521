use rayon::prelude::*;

use crate::dense::{Layout, Matrix};
use crate::error::Result;
use crate::scalar::Real;
use crate::sketch::SketchOperator;

/// Neumaier-compensated sum of terms ordered by increasing magnitude.
fn careful_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for t in terms {
        let s = sum + t;
        if sum.abs() >= t.abs() {
            comp += (sum - s) + t;
        } else {
            comp += (t - s) + sum;
        }
        sum = s;
    }
    sum + comp
}

/// `densify(op)·A` by explicit summation over the nonzeros of each row of
/// the operator. Row-major `k × n`; subject to the densify size guard.
pub fn brute_force_apply<T: Real, O: SketchOperator<T> + ?Sized>(
    op: &O,
    a: &Matrix<T>,
) -> Result<Matrix<T>> {
    let s = op.densify()?;
    if a.rows() != s.cols() {
        return Err(crate::error::Error::shape(
            "brute_force_apply",
            format!("{} rows", s.cols()),
            a.rows(),
        ));
    }
    let (k, n) = (s.rows(), a.cols());
    let nonzeros: Vec<Vec<(usize, f64)>> = (0..k)
        .into_par_iter()
        .map(|i| {
            (0..s.cols())
                .filter_map(|l| {
                    let v = s.get(i, l);
                    (v != T::zero()).then(|| (l, v.as_f64()))
                })
                .collect()
        })
        .collect();
    let data: Vec<T> = (0..k * n)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            let terms = nonzeros[i]
                .iter()
                .map(|&(l, v)| v * a.get(l, j).as_f64())
                .collect();
            T::lit(careful_sum(terms))
        })
        .collect();
    Matrix::from_vec(k, n, Layout::RowMajor, data)
}
