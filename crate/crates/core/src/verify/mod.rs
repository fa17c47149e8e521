//! Test problems with a prescribed condition number, empirical embedding
//! distortion, and a slow reference for sketch application.

mod distortion;
mod oracle;
mod problem;

pub use distortion::{
    measure_distortion, measure_distortion_on_basis, orthonormal_basis, pairwise_distortion_check,
    DistortionReport,
};
pub use oracle::brute_force_apply;
pub use problem::{gen_problem, NoiseMode, ProblemSpec};
