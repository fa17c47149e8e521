use crate::dense::{householder_qr_economy, matmul, matvec, Layout, Transpose};
use crate::error::{Error, Result};
use crate::lsq::LsqProblem;
use crate::rng::{gaussian_fill, gaussian_vec, RngStream};
use crate::scalar::Real;

/// Right-hand side construction, `b = A·1 + η`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NoiseMode {
    /// `η = 0`.
    Consistent,
    /// `ηᵢ ~ N(0, 0.01)`.
    Easy,
    /// `ηᵢ ~ N(3, 2)`.
    Hard,
}

impl NoiseMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NoiseMode::Consistent => "consistent",
            NoiseMode::Easy => "easy",
            NoiseMode::Hard => "hard",
        }
    }

    /// Mean and standard deviation of the noise entries.
    pub fn moments(self) -> (f64, f64) {
        match self {
            NoiseMode::Consistent => (0.0, 0.0),
            NoiseMode::Easy => (0.0, 0.1),
            NoiseMode::Hard => (3.0, std::f64::consts::SQRT_2),
        }
    }
}

impl std::str::FromStr for NoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "consistent" => Ok(NoiseMode::Consistent),
            "easy" => Ok(NoiseMode::Easy),
            "hard" => Ok(NoiseMode::Hard),
            _ => Err(Error::Invalid(format!("unknown noise mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProblemSpec {
    pub d: usize,
    pub n: usize,
    pub kappa: f64,
    pub noise: NoiseMode,
    pub seed: u64,
}

/// `A = U·diag(σ)·Vᵀ` (row-major) with `σᵢ = κ^{−i/(n−1)}` spaced
/// geometrically from 1 down to `1/κ`, and `b` per the noise mode.
///
/// `U` and `V` are the orthonormal factors of Gaussian matrices drawn from
/// streams `(seed, 0)` and `(seed, 1)`; the noise uses `(seed, 2)`.
pub fn gen_problem<T: Real>(spec: &ProblemSpec) -> Result<LsqProblem<T>> {
    let ProblemSpec {
        d,
        n,
        kappa,
        noise,
        seed,
    } = *spec;
    if n == 0 || d < n {
        return Err(Error::Invalid(format!(
            "problem needs d ≥ n ≥ 1 (got d={d}, n={n})"
        )));
    }
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(Error::Invalid(format!(
            "condition number must be finite and ≥ 1 (got {kappa})"
        )));
    }
    let (mut u, _) =
        householder_qr_economy(&gaussian_fill::<T>(d, n, &mut RngStream::new(seed, 0)))?;
    let (v, _) = householder_qr_economy(&gaussian_fill::<T>(n, n, &mut RngStream::new(seed, 1)))?;
    for j in 0..n {
        let t = if n == 1 {
            0.0
        } else {
            j as f64 / (n - 1) as f64
        };
        let sigma = T::lit(kappa.powf(-t));
        u.col_mut(j).iter_mut().for_each(|x| *x *= sigma);
    }
    let a = matmul(&u, Transpose::No, &v, Transpose::Yes, Layout::RowMajor)?;
    let mut b = matvec(&a, Transpose::No, &vec![T::one(); n])?;
    if noise != NoiseMode::Consistent {
        let (mean, std) = noise.moments();
        let eta: Vec<T> = gaussian_vec(d, &mut RngStream::new(seed, 2));
        for (bi, e) in b.iter_mut().zip(eta) {
            *bi += T::lit(mean) + T::lit(std) * e;
        }
    }
    LsqProblem::new(a, b)
}
