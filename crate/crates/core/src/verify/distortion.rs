use crate::dense::{
    householder_qr_economy, matmul, norm2, sym_eigenvalues, Layout, Matrix, Transpose,
};
use crate::error::{Error, Result};
use crate::rng::{gaussian_fill, RngStream};
use crate::scalar::Real;
use crate::sketch::{apply_converting, SketchOperator};

/// Extreme singular values of `S·Q` for an orthonormal `Q` and the implied
/// embedding distortion `max(|σ_max² − 1|, |1 − σ_min²|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionReport {
    pub epsilon_hat: f64,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

impl DistortionReport {
    /// Residual inflation bound `√((1+ε)/(1−ε))`; infinite once `ε ≥ 1`.
    pub fn residual_factor(&self) -> f64 {
        if self.epsilon_hat >= 1.0 {
            f64::INFINITY
        } else {
            ((1.0 + self.epsilon_hat) / (1.0 - self.epsilon_hat)).sqrt()
        }
    }
}

/// Orthonormal `d × n` basis (column-major) from the QR of a Gaussian
/// matrix drawn from stream `(seed, 0)`.
pub fn orthonormal_basis<T: Real>(d: usize, n: usize, seed: u64) -> Result<Matrix<T>> {
    let g = gaussian_fill::<T>(d, n, &mut RngStream::new(seed, 0));
    Ok(householder_qr_economy(&g)?.0)
}

/// Distortion of `op` on a random `n`-dimensional subspace of `ℝᵈ`.
pub fn measure_distortion<T: Real, O: SketchOperator<T> + ?Sized>(
    op: &O,
    d: usize,
    n: usize,
    seed: u64,
) -> Result<DistortionReport> {
    if op.input_dim() != d {
        return Err(Error::shape(
            "measure_distortion",
            format!("operator input {d}"),
            op.input_dim(),
        ));
    }
    measure_distortion_on_basis(op, &orthonormal_basis::<T>(d, n, seed)?)
}

/// Distortion of `op` on the span of the orthonormal columns of `q`.
///
/// Singular values come from the eigenvalues of `BᵀB`, `B = S·Q`; near an
/// embedding they sit close to 1, so squaring costs little accuracy.
pub fn measure_distortion_on_basis<T: Real, O: SketchOperator<T> + ?Sized>(
    op: &O,
    q: &Matrix<T>,
) -> Result<DistortionReport> {
    if q.cols() > op.output_dim() {
        return Err(Error::shape(
            "measure_distortion",
            format!("at most {} columns", op.output_dim()),
            q.cols(),
        ));
    }
    let (b, _) = apply_converting(op, q.clone())?;
    let g = matmul(&b, Transpose::Yes, &b, Transpose::No, Layout::ColMajor)?;
    let eig = sym_eigenvalues(&g)?;
    let hi = eig.first().map_or(1.0, |v| v.as_f64());
    let lo = eig.last().map_or(1.0, |v| v.as_f64());
    Ok(DistortionReport {
        epsilon_hat: (hi - 1.0).abs().max((1.0 - lo).abs()),
        sigma_min: lo.max(0.0).sqrt(),
        sigma_max: hi.max(0.0).sqrt(),
    })
}

const PAIR_BATCH: usize = 128;

/// Largest `|⟨x,y⟩ − ⟨Sx,Sy⟩| / (‖x‖·‖y‖)` over `trials` random pairs in the
/// span of `q`. The first pair has `x = y`.
pub fn pairwise_distortion_check<T: Real, O: SketchOperator<T> + ?Sized>(
    op: &O,
    q: &Matrix<T>,
    trials: usize,
    stream: &mut RngStream,
) -> Result<f64> {
    let n = q.cols();
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < trials {
        let m = PAIR_BATCH.min(trials - done);
        let alpha = gaussian_fill::<T>(n, m, stream);
        let mut beta = gaussian_fill::<T>(n, m, stream);
        if done == 0 {
            for i in 0..n {
                beta.set(i, 0, alpha.get(i, 0));
            }
        }
        let x = matmul(q, Transpose::No, &alpha, Transpose::No, Layout::ColMajor)?;
        let y = matmul(q, Transpose::No, &beta, Transpose::No, Layout::ColMajor)?;
        let sx = apply_converting(op, x.clone())?
            .0
            .into_layout(Layout::ColMajor);
        let sy = apply_converting(op, y.clone())?
            .0
            .into_layout(Layout::ColMajor);
        for t in 0..m {
            let (xc, yc) = (x.col(t), y.col(t));
            let exact: f64 = xc
                .iter()
                .zip(yc)
                .map(|(a, b)| a.as_f64() * b.as_f64())
                .sum();
            let sketched: f64 = sx
                .col(t)
                .iter()
                .zip(sy.col(t))
                .map(|(a, b)| a.as_f64() * b.as_f64())
                .sum();
            let scale = norm2(xc).as_f64() * norm2(yc).as_f64();
            if scale > 0.0 {
                worst = worst.max((exact - sketched).abs() / scale);
            }
        }
        done += m;
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sketch::{Gaussian, ScaledIdentity};

    #[test]
    fn identity_has_no_distortion() {
        let op = ScaledIdentity::<f64>::new(200);
        let rep = measure_distortion(&op, 200, 5, 1).unwrap();
        assert!(rep.epsilon_hat < 1e-13);
        let q = orthonormal_basis::<f64>(200, 5, 1).unwrap();
        assert!(pairwise_distortion_check(&op, &q, 50, &mut RngStream::new(1, 7)).unwrap() < 1e-13);
    }

    #[test]
    fn doubled_identity() {
        let op = ScaledIdentity::<f64>::scaled(64, 2.0);
        let rep = measure_distortion(&op, 64, 4, 2).unwrap();
        assert!((rep.epsilon_hat - 3.0).abs() < 1e-12);
        assert!((rep.sigma_min - 2.0).abs() < 1e-12 && (rep.sigma_max - 2.0).abs() < 1e-12);
        assert_eq!(rep.residual_factor(), f64::INFINITY);
    }

    #[test]
    fn sampled_pairs_never_exceed_the_bound() {
        let (d, n) = (1024, 6);
        let op = Gaussian::<f64>::new(96, d, &mut RngStream::new(3, 5)).unwrap();
        let q = orthonormal_basis::<f64>(d, n, 3).unwrap();
        let rep = measure_distortion_on_basis(&op, &q).unwrap();
        let worst = pairwise_distortion_check(&op, &q, 300, &mut RngStream::new(3, 6)).unwrap();
        assert!(worst <= rep.epsilon_hat + 1e-10);
        assert!(rep.sigma_min <= rep.sigma_max);
    }
}
