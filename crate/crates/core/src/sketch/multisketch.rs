//! Count-Gauss multisketch: a CountSketch `d → k₁` followed by a Gaussian
//! sketch `k₁ → k₂`.
//!
//! The CountSketch output `Y` is row-major `k₁ × n`, which is the same
//! buffer as a column-major `Yᵀ`. The second stage therefore forms
//! `Zᵀ = scale·Yᵀ·Gᵀ` directly on that buffer and only the small `n × k₂`
//! result is transposed into a column-major `Z`.

use super::{check_densify, check_input, CountSketch, Gaussian, SketchOperator, SketchStats};
use crate::dense::{gemm, matmul, transpose_to_layout, Layout, Matrix, Transpose};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct MultiSketch<T: Real> {
    stage1: CountSketch,
    stage2: Gaussian<T>,
}

impl<T: Real> MultiSketch<T> {
    /// Draws the CountSketch and then the Gaussian stage from `stream`.
    pub fn new(d: usize, k1: usize, k2: usize, stream: &mut RngStream) -> Result<Self> {
        let stage1 = CountSketch::new(d, k1, stream)?;
        let stage2 = Gaussian::new(k2, k1, stream)?;
        Self::from_stages(stage1, stage2)
    }

    pub fn from_stages(stage1: CountSketch, stage2: Gaussian<T>) -> Result<Self> {
        if stage1.k() != stage2.d() {
            return Err(Error::shape(
                "multisketch",
                format!("stage 2 input {}", stage1.k()),
                stage2.d(),
            ));
        }
        Ok(MultiSketch { stage1, stage2 })
    }

    pub fn stage1(&self) -> &CountSketch {
        &self.stage1
    }

    pub fn stage2(&self) -> &Gaussian<T> {
        &self.stage2
    }
}

/// Applies `stage2` to a row-major CountSketch output `y`, recording the
/// Gaussian product and the final transpose.
pub(crate) fn second_stage<T: Real>(
    stage2: &Gaussian<T>,
    y: Matrix<T>,
    stats: &mut SketchStats,
) -> Result<Matrix<T>> {
    let n = y.cols();
    let k2 = stage2.k();
    debug_assert_eq!(y.layout(), Layout::RowMajor);
    let yt = y.into_transpose();
    let (bytes, flops) = stage2.cost(n);
    let zt = stats.time("gaussian", bytes, flops, || {
        let mut zt = Matrix::zeros(n, k2, Layout::ColMajor);
        gemm(
            stage2.scale(),
            &yt,
            Transpose::No,
            stage2.matrix(),
            Transpose::Yes,
            T::zero(),
            &mut zt,
        )
        .map(|_| zt)
    })?;
    let start = std::time::Instant::now();
    let (z, copied) = transpose_to_layout(zt.into_transpose(), Layout::ColMajor);
    stats.push(
        "transpose",
        start.elapsed().as_secs_f64(),
        2 * (copied * T::BYTES) as u64,
        0,
    );
    Ok(z)
}

impl<T: Real> SketchOperator<T> for MultiSketch<T> {
    fn name(&self) -> &'static str {
        "multisketch"
    }

    fn input_dim(&self) -> usize {
        self.stage1.d()
    }

    fn output_dim(&self) -> usize {
        self.stage2.k()
    }

    fn input_layout(&self) -> Option<Layout> {
        Some(Layout::RowMajor)
    }

    fn apply_with_stats(&self, a: &Matrix<T>) -> Result<(Matrix<T>, SketchStats)> {
        check_input("multisketch", self.stage1.d(), Some(Layout::RowMajor), a)?;
        let (y, mut stats) = self.stage1.apply_with_stats(a)?;
        stats.phases[0].name = "countsketch";
        let z = second_stage(&self.stage2, y, &mut stats)?;
        Ok((z, stats))
    }

    fn densify(&self) -> Result<Matrix<T>> {
        check_densify("multisketch densify", self.stage2.k(), self.stage1.d())?;
        let s1: Matrix<T> = self.stage1.densify()?;
        let s2 = self.stage2.densify()?;
        matmul(&s2, Transpose::No, &s1, Transpose::No, Layout::RowMajor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::gaussian_fill;

    #[test]
    fn identity_second_stage_returns_countsketch_output() {
        let mut s = RngStream::new(1, 0);
        let cs = CountSketch::new(50, 6, &mut s).unwrap();
        let g = Gaussian::from_matrix(Matrix::<f64>::identity(6, Layout::RowMajor), 1.0);
        let op = MultiSketch::from_stages(cs.clone(), g).unwrap();
        let a: Matrix<f64> = gaussian_fill(50, 3, &mut s);
        let z = op.apply(&a).unwrap();
        assert_eq!(z.layout(), Layout::ColMajor);
        let y = cs.apply_atomic(&a).unwrap().into_layout(Layout::ColMajor);
        assert_eq!(z, y);
    }

    #[test]
    fn matches_dense_composition() {
        let mut s = RngStream::new(2, 0);
        let op = MultiSketch::<f64>::new(64, 32, 8, &mut s).unwrap();
        let a: Matrix<f64> = gaussian_fill(64, 4, &mut s);
        let z = op.apply(&a).unwrap();
        let dense = op.densify().unwrap();
        let expect = matmul(&dense, Transpose::No, &a, Transpose::No, Layout::ColMajor).unwrap();
        assert!(z.rel_diff(&expect) < 1e-12);
    }

    #[test]
    fn transpose_step_copies_only_the_small_result() {
        let mut s = RngStream::new(3, 0);
        let (k1, k2, n) = (128, 16, 8);
        let op = MultiSketch::<f64>::new(1000, k1, k2, &mut s).unwrap();
        let a: Matrix<f64> = gaussian_fill(1000, n, &mut s);
        let (_, stats) = op.apply_with_stats(&a).unwrap();
        assert_eq!(
            stats.phase("transpose").unwrap().bytes,
            (2 * k2 * n * 8) as u64
        );
        let names: Vec<_> = stats.phases.iter().map(|p| p.name).collect();
        assert_eq!(names, ["countsketch", "gaussian", "transpose"]);
    }

    #[test]
    fn mismatched_stages_are_rejected() {
        let mut s = RngStream::new(4, 0);
        let cs = CountSketch::new(10, 5, &mut s).unwrap();
        let g = Gaussian::<f64>::new(2, 6, &mut s).unwrap();
        assert!(MultiSketch::from_stages(cs, g).is_err());
    }
}
