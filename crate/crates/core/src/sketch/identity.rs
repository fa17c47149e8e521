//! `c·I`, the degenerate sketch used to check solver and verifier plumbing.

use super::{check_densify, check_input, SketchOperator, SketchStats};
use crate::dense::{Layout, Matrix};
use crate::error::Result;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledIdentity<T> {
    d: usize,
    scale: T,
}

impl<T: Real> ScaledIdentity<T> {
    pub fn new(d: usize) -> Self {
        ScaledIdentity { d, scale: T::one() }
    }

    pub fn scaled(d: usize, scale: T) -> Self {
        ScaledIdentity { d, scale }
    }
}

impl<T: Real> SketchOperator<T> for ScaledIdentity<T> {
    fn name(&self) -> &'static str {
        "identity"
    }

    fn input_dim(&self) -> usize {
        self.d
    }

    fn output_dim(&self) -> usize {
        self.d
    }

    fn input_layout(&self) -> Option<Layout> {
        None
    }

    fn apply_with_stats(&self, a: &Matrix<T>) -> Result<(Matrix<T>, SketchStats)> {
        check_input("identity sketch", self.d, None, a)?;
        let mut stats = SketchStats::default();
        let n = (a.rows() * a.cols()) as u64;
        let y = stats.time("apply", 2 * n * T::BYTES as u64, n, || {
            let mut y = a.clone();
            if self.scale != T::one() {
                y.scale_in_place(self.scale);
            }
            y
        });
        Ok((y, stats))
    }

    fn densify(&self) -> Result<Matrix<T>> {
        check_densify("identity densify", self.d, self.d)?;
        let mut s = Matrix::identity(self.d, Layout::RowMajor);
        s.scale_in_place(self.scale);
        Ok(s)
    }
}
