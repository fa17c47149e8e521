//! Dense Gaussian sketch `S = k^{-1/2}·G` with `G` stored unscaled.

use super::{check_densify, check_input, SketchOperator, SketchStats};
use crate::dense::{gemm, Layout, Matrix, Transpose};
use crate::error::{Error, Result};
use crate::rng::{gaussian_fill, RngStream};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian<T: Real> {
    g: Matrix<T>,
    scale: T,
}

impl<T: Real> Gaussian<T> {
    /// `k × d` operator with i.i.d. standard normal `G` and scale `1/√k`.
    pub fn new(k: usize, d: usize, stream: &mut RngStream) -> Result<Self> {
        if k == 0 || d == 0 {
            return Err(Error::Invalid(format!(
                "gaussian sketch needs k ≥ 1 and d ≥ 1 (got k={k}, d={d})"
            )));
        }
        let g = gaussian_fill(k, d, stream);
        Ok(Gaussian {
            g,
            scale: T::one() / T::lit(k as f64).sqrt(),
        })
    }

    /// Operator `scale·G` for a given matrix.
    pub fn from_matrix(g: Matrix<T>, scale: T) -> Self {
        Gaussian { g, scale }
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.g
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    pub fn k(&self) -> usize {
        self.g.rows()
    }

    pub fn d(&self) -> usize {
        self.g.cols()
    }

    /// Horizontal concatenation `[G₁ G₂ …]`, keeping the first scale.
    pub fn concat(parts: &[Gaussian<T>]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Invalid("empty concatenation".into()))?;
        let k = first.k();
        if parts.iter().any(|p| p.k() != k) {
            return Err(Error::Invalid(
                "concatenated gaussian sketches must share k".into(),
            ));
        }
        let d: usize = parts.iter().map(|p| p.d()).sum();
        let mut g = Matrix::zeros(k, d, Layout::RowMajor);
        let mut offset = 0;
        for p in parts {
            for i in 0..k {
                for j in 0..p.d() {
                    g.set(i, offset + j, p.g.get(i, j));
                }
            }
            offset += p.d();
        }
        Ok(Gaussian {
            g,
            scale: first.scale,
        })
    }

    pub fn cost(&self, n: usize) -> (u64, u64) {
        let (k, d, n) = (self.k() as u64, self.d() as u64, n as u64);
        ((k * d + d * n + k * n) * T::BYTES as u64, 2 * k * d * n)
    }
}

impl<T: Real> SketchOperator<T> for Gaussian<T> {
    fn name(&self) -> &'static str {
        "gaussian"
    }

    fn input_dim(&self) -> usize {
        self.d()
    }

    fn output_dim(&self) -> usize {
        self.k()
    }

    fn input_layout(&self) -> Option<Layout> {
        None
    }

    fn apply_with_stats(&self, a: &Matrix<T>) -> Result<(Matrix<T>, SketchStats)> {
        check_input("gaussian sketch", self.d(), None, a)?;
        let (bytes, flops) = self.cost(a.cols());
        let mut stats = SketchStats::default();
        let y = stats.time("apply", bytes, flops, || {
            let mut y = Matrix::zeros(self.k(), a.cols(), Layout::ColMajor);
            gemm(
                self.scale,
                &self.g,
                Transpose::No,
                a,
                Transpose::No,
                T::zero(),
                &mut y,
            )
            .map(|_| y)
        })?;
        Ok((y, stats))
    }

    fn densify(&self) -> Result<Matrix<T>> {
        check_densify("gaussian densify", self.k(), self.d())?;
        let mut s = self.g.clone();
        s.scale_in_place(self.scale);
        Ok(s)
    }
}
