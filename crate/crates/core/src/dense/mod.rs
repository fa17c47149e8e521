//! Dense-matrix substrate: storage with explicit layout and the kernels every
//! sketch and solver builds on.

mod eigen;
mod gemm;
mod matrix;
mod qr;
mod triangular;

pub use eigen::{condition_number, singular_values, sym_eigenvalues};
pub use gemm::{gemm, gemv, matmul, matvec, Transpose};
pub use matrix::{dot, norm2, transpose_to_layout, Layout, Matrix};
pub use qr::{householder_qr_economy, HouseholderQr};
pub use triangular::{cholesky, tri_solve, tri_solve_right, tri_solve_vec, upper_mul};
