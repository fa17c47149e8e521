//! Overdetermined least squares `min_x ‖Ax − b‖₂`.
//!
//! Four solvers share one report type: normal equations through Cholesky,
//! sketch-and-solve, randomized Cholesky QR least squares, and the
//! Householder QR reference. Every report carries a per-phase wall-clock
//! breakdown (consecutive laps, so the phases add up to the solve time) and
//! a relative residual recomputed from the original `A` and `b` after the
//! solve.

use std::time::Instant;

use crate::dense::{
    cholesky, matmul, matvec, norm2, tri_solve_right, tri_solve_vec, upper_mul, HouseholderQr,
    Layout, Matrix, Transpose,
};
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::sketch::{apply_converting, SketchOperator};

/// Relative size of an `R` diagonal entry below which the factor counts as singular.
pub const SINGULAR_R_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq)]
pub struct LsqProblem<T: Real> {
    pub a: Matrix<T>,
    pub b: Vec<T>,
}

impl<T: Real> LsqProblem<T> {
    pub fn new(a: Matrix<T>, b: Vec<T>) -> Result<Self> {
        let (d, n) = a.shape();
        if n == 0 || d < n {
            return Err(Error::shape("lsq problem", "d ≥ n ≥ 1", format!("{d}×{n}")));
        }
        if b.len() != d {
            return Err(Error::shape(
                "lsq problem",
                format!("rhs of length {d}"),
                b.len(),
            ));
        }
        Ok(LsqProblem { a, b })
    }

    pub fn d(&self) -> usize {
        self.a.rows()
    }

    pub fn n(&self) -> usize {
        self.a.cols()
    }

    /// `‖b − Ax‖₂ / ‖b‖₂` (plain `‖b − Ax‖₂` when `b = 0`).
    pub fn relative_residual(&self, x: &[T]) -> Result<T> {
        let ax = matvec(&self.a, Transpose::No, x)?;
        let r: Vec<T> = self.b.iter().zip(&ax).map(|(&b, &y)| b - y).collect();
        let nb = norm2(&self.b);
        let nr = norm2(&r);
        Ok(if nb == T::zero() { nr } else { nr / nb })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Ok,
    /// The Gram matrix lost positive definiteness.
    CholeskyFailed,
    /// A triangular factor is numerically rank deficient.
    SingularR,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Ok => "ok",
            SolveStatus::CholeskyFailed => "cholesky_failed",
            SolveStatus::SingularR => "singular_r",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseTime {
    pub name: &'static str,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LsqReport<T> {
    pub x: Option<Vec<T>>,
    pub relative_residual: Option<T>,
    /// Phases in execution order.
    pub phases: Vec<PhaseTime>,
    pub wall_seconds: f64,
    pub status: SolveStatus,
}

impl<T: Real> LsqReport<T> {
    pub fn phase(&self, name: &str) -> Option<f64> {
        self.phases
            .iter()
            .find(|p| p.name == name)
            .map(|p| p.seconds)
    }

    pub fn phase_sum(&self) -> f64 {
        self.phases.iter().map(|p| p.seconds).sum()
    }

    pub fn is_ok(&self) -> bool {
        self.status == SolveStatus::Ok
    }
}

struct Laps {
    start: Instant,
    last: Instant,
    phases: Vec<PhaseTime>,
}

impl Laps {
    fn start() -> Self {
        let now = Instant::now();
        Laps {
            start: now,
            last: now,
            phases: Vec::new(),
        }
    }

    fn lap(&mut self, name: &'static str) {
        let now = Instant::now();
        self.phases.push(PhaseTime {
            name,
            seconds: (now - self.last).as_secs_f64(),
        });
        self.last = now;
    }
}

enum Outcome<T> {
    Solved(Vec<T>),
    Failed(SolveStatus),
}

/// Maps factorization breakdowns onto report statuses; other errors propagate.
fn classify<V>(r: Result<V>) -> Result<std::result::Result<V, SolveStatus>> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(Error::NotPositiveDefinite { .. }) => Ok(Err(SolveStatus::CholeskyFailed)),
        Err(Error::Singular { .. }) => Ok(Err(SolveStatus::SingularR)),
        Err(e) => Err(e),
    }
}

fn finish<T: Real>(
    problem: &LsqProblem<T>,
    laps: Laps,
    outcome: Outcome<T>,
) -> Result<LsqReport<T>> {
    let wall_seconds = (laps.last - laps.start).as_secs_f64();
    let (x, relative_residual, status) = match outcome {
        Outcome::Solved(x) => {
            let res = problem.relative_residual(&x)?;
            (Some(x), Some(res), SolveStatus::Ok)
        }
        Outcome::Failed(s) => (None, None, s),
    };
    Ok(LsqReport {
        x,
        relative_residual,
        phases: laps.phases,
        wall_seconds,
        status,
    })
}

macro_rules! attempt {
    ($problem:expr, $laps:expr, $e:expr) => {
        match classify($e)? {
            Ok(v) => v,
            Err(status) => return finish($problem, $laps, Outcome::Failed(status)),
        }
    };
}

fn rank_deficient<T: Real>(qr: &HouseholderQr<T>) -> bool {
    let diag = qr.r_diagonal();
    let norm = qr.r().frobenius_norm();
    let tol = T::lit(SINGULAR_R_TOL) * norm;
    norm == T::zero() || diag.iter().any(|v| !(v.abs() > tol))
}

fn check_operator<T: Real, O: SketchOperator<T> + ?Sized>(
    op: &O,
    d: usize,
    n: usize,
) -> Result<()> {
    if op.input_dim() != d {
        return Err(Error::shape(
            "sketch operator",
            format!("input dimension {d}"),
            op.input_dim(),
        ));
    }
    if op.output_dim() < n {
        return Err(Error::shape(
            "sketch operator",
            format!("output dimension ≥ {n}"),
            op.output_dim(),
        ));
    }
    Ok(())
}

/// `AᵀA x = Aᵀb` through `RᵀR = AᵀA`. Phases: gram, rhs, cholesky, solves.
pub fn solve_normal_equations<T: Real>(problem: &LsqProblem<T>) -> Result<LsqReport<T>> {
    let a = &problem.a;
    let mut laps = Laps::start();
    let g = matmul(a, Transpose::Yes, a, Transpose::No, Layout::ColMajor)?;
    laps.lap("gram");
    let rhs = matvec(a, Transpose::Yes, &problem.b)?;
    laps.lap("rhs");
    let r = cholesky(&g);
    laps.lap("cholesky");
    let r = attempt!(problem, laps, r);
    let x =
        tri_solve_vec(&r, Transpose::Yes, &rhs).and_then(|y| tri_solve_vec(&r, Transpose::No, &y));
    laps.lap("solves");
    let x = attempt!(problem, laps, x);
    finish(problem, laps, Outcome::Solved(x))
}

/// Minimizes `‖S(Ax − b)‖₂`: QR of `SA`, then `x = R⁻¹(QᵀSb)` with `Qᵀ`
/// applied through the stored reflectors. Phases: sketch, qr, apply-q, trsv.
pub fn solve_sketch_and_solve<T: Real, O: SketchOperator<T> + ?Sized>(
    problem: &LsqProblem<T>,
    op: &O,
) -> Result<LsqReport<T>> {
    let n = problem.n();
    check_operator(op, problem.d(), n)?;
    let mut laps = Laps::start();
    let (y, _) = apply_converting(op, problem.a.clone())?;
    let mut z = op.apply_vec(&problem.b)?;
    laps.lap("sketch");
    let qr = HouseholderQr::new(&y)?;
    laps.lap("qr");
    if rank_deficient(&qr) {
        return finish(problem, laps, Outcome::Failed(SolveStatus::SingularR));
    }
    qr.apply_qt(&mut z);
    laps.lap("apply-q");
    let x = tri_solve_vec(&qr.r(), Transpose::No, &z[..n]);
    laps.lap("trsv");
    let x = attempt!(problem, laps, x);
    finish(problem, laps, Outcome::Solved(x))
}

/// Result of randomized Cholesky QR.
#[derive(Debug, Clone, PartialEq)]
pub struct RandCholQr<T: Real> {
    /// `d × n` with orthonormal columns, row-major.
    pub q: Matrix<T>,
    /// `n × n` upper triangular, `R = R₁R₀`.
    pub r: Matrix<T>,
}

struct Preconditioned<T: Real> {
    q0: Matrix<T>,
    r0: Matrix<T>,
}

fn precondition<T: Real, O: SketchOperator<T> + ?Sized>(
    a: &Matrix<T>,
    op: &O,
    laps: &mut Laps,
) -> Result<std::result::Result<Preconditioned<T>, SolveStatus>> {
    let (y, _) = apply_converting(op, a.clone())?;
    laps.lap("sketch");
    let qr = HouseholderQr::new(&y)?;
    laps.lap("qr");
    if rank_deficient(&qr) {
        return Ok(Err(SolveStatus::SingularR));
    }
    let r0 = qr.r();
    let q0 = tri_solve_right(a, &r0);
    laps.lap("precondition");
    Ok(classify(q0)?.map(|q0| Preconditioned { q0, r0 }))
}

/// Randomized Cholesky QR: `R₀` from a QR of `SA`, `Q₀ = AR₀⁻¹`,
/// `R₁ = chol(Q₀ᵀQ₀)`, `Q = Q₀R₁⁻¹`, `R = R₁R₀`.
///
/// Errors with [`Error::NotPositiveDefinite`] when the preconditioned Gram
/// matrix is not numerically positive definite and [`Error::Singular`] when
/// the sketch is rank deficient.
pub fn rand_cholqr<T: Real, O: SketchOperator<T> + ?Sized>(
    a: &Matrix<T>,
    op: &O,
) -> Result<RandCholQr<T>> {
    check_operator(op, a.rows(), a.cols())?;
    let mut laps = Laps::start();
    let Preconditioned { q0, r0 } = match precondition(a, op, &mut laps)? {
        Ok(p) => p,
        Err(_) => return Err(Error::Singular { index: 0 }),
    };
    let g = matmul(&q0, Transpose::Yes, &q0, Transpose::No, Layout::ColMajor)?;
    let r1 = cholesky(&g)?;
    let q = tri_solve_right(&q0, &r1)?;
    let r = upper_mul(&r1, &r0);
    Ok(RandCholQr { q, r })
}

/// Least squares through randomized Cholesky QR without forming `Q`:
/// `x = R⁻¹·R₁⁻ᵀ·Q₀ᵀb`. Phases: sketch, qr, precondition, gram, cholesky, solves.
pub fn solve_randcholqr_lsq<T: Real, O: SketchOperator<T> + ?Sized>(
    problem: &LsqProblem<T>,
    op: &O,
) -> Result<LsqReport<T>> {
    check_operator(op, problem.d(), problem.n())?;
    let mut laps = Laps::start();
    let pre = precondition(&problem.a, op, &mut laps)?;
    let Preconditioned { q0, r0 } = match pre {
        Ok(p) => p,
        Err(status) => return finish(problem, laps, Outcome::Failed(status)),
    };
    let g = matmul(&q0, Transpose::Yes, &q0, Transpose::No, Layout::ColMajor)?;
    laps.lap("gram");
    let r1 = cholesky(&g);
    laps.lap("cholesky");
    let r1 = attempt!(problem, laps, r1);
    let x = matvec(&q0, Transpose::Yes, &problem.b).and_then(|z| {
        let y = tri_solve_vec(&r1, Transpose::Yes, &z)?;
        let r = upper_mul(&r1, &r0);
        tri_solve_vec(&r, Transpose::No, &y)
    });
    laps.lap("solves");
    let x = attempt!(problem, laps, x);
    finish(problem, laps, Outcome::Solved(x))
}

/// Householder QR of the full `A`; the accuracy reference. Phases: qr, apply-q, trsv.
pub fn solve_qr_reference<T: Real>(problem: &LsqProblem<T>) -> Result<LsqReport<T>> {
    let n = problem.n();
    let mut laps = Laps::start();
    let qr = HouseholderQr::new(&problem.a)?;
    laps.lap("qr");
    if rank_deficient(&qr) {
        return finish(problem, laps, Outcome::Failed(SolveStatus::SingularR));
    }
    let mut z = problem.b.clone();
    qr.apply_qt(&mut z);
    laps.lap("apply-q");
    let x = tri_solve_vec(&qr.r(), Transpose::No, &z[..n]);
    laps.lap("trsv");
    let x = attempt!(problem, laps, x);
    finish(problem, laps, Outcome::Solved(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sketch::ScaledIdentity;

    fn orthonormal_problem() -> LsqProblem<f64> {
        let a = Matrix::from_rows(&[[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]);
        LsqProblem::new(a, vec![1.0, 2.0, 3.0]).unwrap()
    }

    fn assert_close(x: &[f64], expect: &[f64], tol: f64) {
        for (a, b) in x.iter().zip(expect) {
            assert!((a - b).abs() <= tol, "{x:?} vs {expect:?}");
        }
    }

    #[test]
    fn normal_equations_on_orthonormal_columns() {
        let p = orthonormal_problem();
        let rep = solve_normal_equations(&p).unwrap();
        assert_eq!(rep.x.as_deref(), Some(&[1.0, 2.0][..]));
        let expect = 3.0 / 14f64.sqrt();
        assert!((rep.relative_residual.unwrap() - expect).abs() < 1e-15);
        let names: Vec<_> = rep.phases.iter().map(|p| p.name).collect();
        assert_eq!(names, ["gram", "rhs", "cholesky", "solves"]);
    }

    #[test]
    fn every_solver_agrees_on_orthonormal_columns() {
        let p = orthonormal_problem();
        let id = ScaledIdentity::new(3);
        for rep in [
            solve_qr_reference(&p).unwrap(),
            solve_sketch_and_solve(&p, &id).unwrap(),
            solve_randcholqr_lsq(&p, &id).unwrap(),
        ] {
            assert!(rep.is_ok());
            assert_close(rep.x.as_ref().unwrap(), &[1.0, 2.0], 1e-15);
        }
    }

    #[test]
    fn rand_cholqr_of_orthonormal_columns() {
        let a = Matrix::<f64>::from_rows(&[[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]]);
        let f = rand_cholqr(&a, &ScaledIdentity::new(3)).unwrap();
        assert!(f.q.diff_norm(&a) < 1e-15);
        assert!(f.r.diff_norm(&Matrix::identity(2, Layout::ColMajor)) < 1e-15);
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = Matrix::<f64>::from_rows(&[[1.0, 1.0], [1.0, 1.0], [1.0, 1.0]]);
        let p = LsqProblem::new(a, vec![1.0, 2.0, 3.0]).unwrap();
        let rep = solve_qr_reference(&p).unwrap();
        assert_eq!(rep.status, SolveStatus::SingularR);
        assert!(rep.x.is_none() && rep.relative_residual.is_none());
        assert_eq!(
            solve_normal_equations(&p).unwrap().status,
            SolveStatus::CholeskyFailed
        );
    }

    #[test]
    fn phases_add_up_to_wall_time() {
        let p = orthonormal_problem();
        let rep = solve_randcholqr_lsq(&p, &ScaledIdentity::new(3)).unwrap();
        assert!((rep.phase_sum() - rep.wall_seconds).abs() <= 1e-9 + 0.05 * rep.wall_seconds);
        let names: Vec<_> = rep.phases.iter().map(|p| p.name).collect();
        assert_eq!(
            names,
            ["sketch", "qr", "precondition", "gram", "cholesky", "solves"]
        );
    }

    #[test]
    fn operator_dimensions_are_checked() {
        let p = orthonormal_problem();
        assert!(matches!(
            solve_sketch_and_solve(&p, &ScaledIdentity::new(4)),
            Err(Error::Shape { .. })
        ));
        assert!(
            LsqProblem::new(Matrix::<f64>::zeros(2, 3, Layout::RowMajor), vec![0.0; 2]).is_err()
        );
        assert!(
            LsqProblem::new(Matrix::<f64>::zeros(3, 2, Layout::RowMajor), vec![0.0; 2]).is_err()
        );
    }
}
