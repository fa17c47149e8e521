//! Randomized sketching for tall-and-skinny linear algebra.
//!
//! The crate provides four sketch operators (CountSketch, Gaussian, SRHT and
//! the Count-Gauss multisketch), the least-squares solvers built on them, and
//! the dense kernels they need: packed GEMM, blocked Householder QR,
//! Cholesky, triangular solves and a Jacobi eigensolver. Everything is
//! generic over [`Real`] (`f32` or `f64`); the aliases below fix `f64`, the
//! precision the stability thresholds assume.
//!
//! ```
//! use sketchla::{gen_problem, solve_sketch_and_solve, MultiSketchOperator, NoiseMode, ProblemSpec, RngStream};
//!
//! let spec = ProblemSpec { d: 4096, n: 8, kappa: 1e2, noise: NoiseMode::Easy, seed: 1 };
//! let problem = gen_problem::<f64>(&spec).unwrap();
//! let op = MultiSketchOperator::new(4096, 128, 16, &mut RngStream::new(1, 7)).unwrap();
//! let report = solve_sketch_and_solve(&problem, &op).unwrap();
//! assert!(report.is_ok());
//! ```

pub mod dense;
pub mod error;
pub mod fwht;
pub mod lsq;
pub mod rng;
pub mod scalar;
pub mod sketch;
pub mod verify;

pub use dense::{Layout, Matrix, Transpose};
pub use error::{Error, Result};
pub use fwht::{fwht_inplace, fwht_matrix, FwhtPlan};
pub use lsq::{
    rand_cholqr, solve_normal_equations, solve_qr_reference, solve_randcholqr_lsq,
    solve_sketch_and_solve, SolveStatus,
};
pub use rng::RngStream;
pub use scalar::Real;
pub use sketch::{
    apply_blocked, BlockFamily, CountSketch, SketchKind, SketchOperator, SketchStats,
};
pub use verify::{gen_problem, measure_distortion, NoiseMode, ProblemSpec};

pub type DenseMatrix = Matrix<f64>;
pub type CountSketchOperator = CountSketch;
pub type GaussianOperator = sketch::Gaussian<f64>;
pub type SrhtOperator = sketch::Srht<f64>;
pub type MultiSketchOperator = sketch::MultiSketch<f64>;
pub type LsqProblem = lsq::LsqProblem<f64>;
pub type LsqReport = lsq::LsqReport<f64>;
