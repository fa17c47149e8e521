use sketchla::dense::{matmul, Layout, Matrix, Transpose};
use sketchla::lsq::{LsqProblem, LsqReport};
use sketchla::sketch::{MultiSketch, ScaledIdentity, SketchDims, SketchKind};
use sketchla::verify::{gen_problem, NoiseMode, ProblemSpec};
use sketchla::*;

const D: usize = 1 << 14;

fn problem(kappa: f64, noise: NoiseMode, seed: u64) -> LsqProblem<f64> {
    gen_problem(&ProblemSpec {
        d: D,
        n: 16,
        kappa,
        noise,
        seed,
    })
    .unwrap()
}

fn multisketch(d: usize, n: usize, seed: u64) -> MultiSketch<f64> {
    MultiSketch::new(d, 2 * n * n, 2 * n, &mut RngStream::new(seed, 77)).unwrap()
}

fn residual(r: &LsqReport<f64>) -> f64 {
    r.relative_residual.expect("solver succeeded")
}

fn orthogonality(q: &Matrix<f64>) -> f64 {
    let g = matmul(q, Transpose::Yes, q, Transpose::No, Layout::ColMajor).unwrap();
    g.diff_norm(&Matrix::identity(q.cols(), Layout::ColMajor))
}

fn recomposition(q: &Matrix<f64>, r: &Matrix<f64>, a: &Matrix<f64>) -> f64 {
    let qr = matmul(q, Transpose::No, r, Transpose::No, Layout::RowMajor).unwrap();
    qr.diff_norm(a) / a.frobenius_norm()
}

#[test]
fn consistent_well_conditioned_normal_equations() {
    let p = problem(1e2, NoiseMode::Consistent, 1);
    assert!(residual(&solve_normal_equations(&p).unwrap()) <= 1e-12);
}

#[test]
fn normal_equations_break_down_when_ill_conditioned() {
    for kappa in [1e10, 1e12] {
        let p = problem(kappa, NoiseMode::Consistent, 2);
        let ne = solve_normal_equations(&p).unwrap();
        let reference = residual(&solve_qr_reference(&p).unwrap());
        let broke = match ne.relative_residual {
            None => ne.status == SolveStatus::CholeskyFailed,
            Some(r) => r > 1e-2 || r >= 1e3 * reference,
        };
        assert!(broke, "κ={kappa:e}: {:?}", ne.status);
    }
}

#[test]
fn identity_sketch_reproduces_qr_solution() {
    let p = gen_problem::<f64>(&ProblemSpec {
        d: 300,
        n: 7,
        kappa: 1e3,
        noise: NoiseMode::Hard,
        seed: 3,
    })
    .unwrap();
    let sas = solve_sketch_and_solve(&p, &ScaledIdentity::new(300)).unwrap();
    let qr = solve_qr_reference(&p).unwrap();
    for (a, b) in sas.x.unwrap().iter().zip(qr.x.unwrap()) {
        assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
    }
}

#[test]
fn multisketch_residual_on_easy_problems() {
    // With k₂ = 2n the inflation concentrates near √2, so 1.6·r* is a
    // typical bound rather than a per-instance guarantee.
    let mut within = 0;
    for seed in 0..20u64 {
        let p = problem(1e2, NoiseMode::Easy, seed);
        let r_star = residual(&solve_normal_equations(&p).unwrap());
        let sas = residual(&solve_sketch_and_solve(&p, &multisketch(D, 16, seed)).unwrap());
        assert!(sas >= r_star * (1.0 - 1e-12), "{sas} vs {r_star}");
        assert!(sas <= 2.5 * r_star, "{sas} vs {r_star}");
        if sas <= 1.6 * r_star {
            within += 1;
        }
    }
    assert!(within >= 16, "{within}/20 within 1.6·r*");
}

#[test]
fn ill_conditioned_consistent_systems_stay_accurate() {
    let p = problem(1e10, NoiseMode::Consistent, 4);
    let op = multisketch(D, 16, 4);
    assert!(residual(&solve_sketch_and_solve(&p, &op).unwrap()) <= 1e-6);
    assert!(residual(&solve_randcholqr_lsq(&p, &op).unwrap()) <= 1e-6);
    let p = problem(1e12, NoiseMode::Consistent, 4);
    assert!(residual(&solve_qr_reference(&p).unwrap()) <= 1e-6);
}

#[test]
fn rand_cholqr_factors() {
    let p = problem(1e6, NoiseMode::Consistent, 5);
    let f = rand_cholqr(&p.a, &multisketch(D, 16, 5)).unwrap();
    assert!(orthogonality(&f.q) <= 1e-10);
    assert!(recomposition(&f.q, &f.r, &p.a) <= 1e-13);
    for kappa in [1e2, 1e4, 1e8, 1e10] {
        let p = problem(kappa, NoiseMode::Consistent, 6);
        let f = rand_cholqr(&p.a, &multisketch(D, 16, 6)).unwrap();
        assert!(orthogonality(&f.q) <= 1e-8, "κ={kappa:e}");
        assert!(recomposition(&f.q, &f.r, &p.a) <= 1e-12, "κ={kappa:e}");
        for i in 0..16 {
            for j in 0..i {
                assert_eq!(f.r.get(i, j), 0.0);
            }
        }
    }
}

#[test]
fn rand_cholqr_with_identity_on_orthonormal_columns() {
    let a = sketchla::verify::orthonormal_basis::<f64>(200, 5, 8).unwrap();
    let f = rand_cholqr(&a, &ScaledIdentity::new(200)).unwrap();
    assert!(f.q.diff_norm(&a) < 1e-14);
    assert!(f.r.diff_norm(&Matrix::identity(5, Layout::ColMajor)) < 1e-14);
    let b: Vec<f64> = (0..200).map(|i| (i as f64).sin()).collect();
    let p = LsqProblem::new(a.clone(), b.clone()).unwrap();
    let x = solve_randcholqr_lsq(&p, &ScaledIdentity::new(200))
        .unwrap()
        .x
        .unwrap();
    let atb = sketchla::dense::matvec(&a, Transpose::Yes, &b).unwrap();
    for (u, v) in x.iter().zip(&atb) {
        assert!((u - v).abs() < 1e-14);
    }
}

#[test]
fn randcholqr_lsq_has_no_distortion() {
    for (noise, seed) in [(NoiseMode::Easy, 10), (NoiseMode::Hard, 11)] {
        let p = problem(1e2, noise, seed);
        let qr = residual(&solve_qr_reference(&p).unwrap());
        let rc = residual(&solve_randcholqr_lsq(&p, &multisketch(D, 16, seed)).unwrap());
        assert!(rc <= 1.000_000_1 * qr, "{rc} vs {qr}");
    }
}

#[test]
fn qr_reference_agrees_with_normal_equations_when_well_conditioned() {
    let p = problem(1e2, NoiseMode::Hard, 12);
    let x_ne = solve_normal_equations(&p).unwrap().x.unwrap();
    let x_qr = solve_qr_reference(&p).unwrap().x.unwrap();
    let diff: f64 = x_ne
        .iter()
        .zip(&x_qr)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let norm: f64 = x_qr.iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!(diff / norm <= 1e-10);
}

#[test]
fn no_solver_beats_the_reference() {
    for seed in 0..6u64 {
        for noise in [NoiseMode::Easy, NoiseMode::Hard] {
            let p = gen_problem::<f64>(&ProblemSpec {
                d: 4096,
                n: 12,
                kappa: 1e3,
                noise,
                seed,
            })
            .unwrap();
            let reference = residual(&solve_qr_reference(&p).unwrap());
            let mut reports = vec![solve_normal_equations(&p).unwrap()];
            for kind in SketchKind::ALL {
                let op = kind
                    .build::<f64>(4096, kind.default_dims(12), &mut RngStream::new(seed, 5))
                    .unwrap();
                reports.push(solve_sketch_and_solve(&p, &op).unwrap());
                reports.push(solve_randcholqr_lsq(&p, &op).unwrap());
            }
            for r in reports.iter().filter(|r| r.is_ok()) {
                assert!(residual(r) >= reference - 1e-12);
            }
        }
    }
}

#[test]
fn sketch_and_solve_within_measured_distortion() {
    let (d, n) = (4096, 8);
    let dims = SketchDims {
        k: 8 * n * n,
        k2: Some(32 * n),
    };
    for seed in 0..10u64 {
        let p = gen_problem::<f64>(&ProblemSpec {
            d,
            n,
            kappa: 1e2,
            noise: NoiseMode::Hard,
            seed,
        })
        .unwrap();
        let op = SketchKind::MultiSketch
            .build::<f64>(d, dims, &mut RngStream::new(seed, 9))
            .unwrap();
        let mut ab = p.a.to_layout(Layout::ColMajor).into_vec();
        ab.extend_from_slice(&p.b);
        let ab = Matrix::from_vec(d, n + 1, Layout::ColMajor, ab).unwrap();
        let basis = sketchla::dense::householder_qr_economy(&ab).unwrap().0;
        let eps = sketchla::verify::measure_distortion_on_basis(&op, &basis).unwrap();
        let reference = residual(&solve_qr_reference(&p).unwrap());
        let sas = residual(&solve_sketch_and_solve(&p, &op).unwrap());
        assert!(eps.epsilon_hat < 1.0);
        assert!(sas >= reference * (1.0 - 1e-12) && sas <= eps.residual_factor() * reference);
    }
}

#[test]
fn phase_times_account_for_the_solve() {
    let p = problem(1e2, NoiseMode::Easy, 13);
    let op = multisketch(D, 16, 13);
    let reports = [
        solve_normal_equations(&p).unwrap(),
        solve_sketch_and_solve(&p, &op).unwrap(),
        solve_randcholqr_lsq(&p, &op).unwrap(),
        solve_qr_reference(&p).unwrap(),
    ];
    for r in &reports {
        assert!(r.wall_seconds > 0.0);
        assert!((r.phase_sum() - r.wall_seconds).abs() <= 0.05 * r.wall_seconds);
    }
    let names: Vec<_> = reports[1].phases.iter().map(|p| p.name).collect();
    assert_eq!(names, ["sketch", "qr", "apply-q", "trsv"]);
}
