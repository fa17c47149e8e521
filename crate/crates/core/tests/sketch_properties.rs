use proptest::prelude::*;
use sketchla::dense::{Layout, Matrix};
use sketchla::rng::gaussian_fill;
use sketchla::sketch::*;
use sketchla::verify::{brute_force_apply, measure_distortion};
use sketchla::RngStream;

fn input_for<O: SketchOperator<f64> + ?Sized>(op: &O, a: Matrix<f64>) -> Matrix<f64> {
    match op.input_layout() {
        Some(l) => a.into_layout(l),
        None => a,
    }
}

fn small_dims(kind: SketchKind, n: usize) -> SketchDims {
    match kind {
        SketchKind::MultiSketch => SketchDims {
            k: 4 * n * n,
            k2: Some(2 * n),
        },
        _ => kind.default_dims(n),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn fast_apply_matches_dense_oracle(
        kind_idx in 0usize..4, d in 64usize..=2048, n in 1usize..=12, seed: u64,
    ) {
        let kind = SketchKind::ALL[kind_idx];
        let op = kind.build::<f64>(d, small_dims(kind, n), &mut RngStream::new(seed, 0)).unwrap();
        let a = input_for(&op, gaussian_fill(d, n, &mut RngStream::new(seed, 1)));
        let fast = op.apply(&a).unwrap();
        let slow = brute_force_apply(&op, &a).unwrap();
        prop_assert!(fast.rel_diff(&slow) <= 1e-11, "{:?}: {}", kind, fast.rel_diff(&slow));
    }

    #[test]
    fn apply_is_linear(
        kind_idx in 0usize..4, d in 16usize..=1024, n in 1usize..=6,
        alpha in -2.0f64..2.0, beta in -2.0f64..2.0, seed: u64,
    ) {
        let kind = SketchKind::ALL[kind_idx];
        let op = kind.build::<f64>(d, small_dims(kind, n), &mut RngStream::new(seed, 0)).unwrap();
        let mut s = RngStream::new(seed, 1);
        let a = input_for(&op, gaussian_fill(d, n, &mut s));
        let b = input_for(&op, gaussian_fill(d, n, &mut s));
        let combo = Matrix::from_fn(d, n, a.layout(), |i, j| alpha * a.get(i, j) + beta * b.get(i, j));
        let lhs = op.apply(&combo).unwrap();
        let (sa, sb) = (op.apply(&a).unwrap(), op.apply(&b).unwrap());
        let rhs = Matrix::from_fn(lhs.rows(), n, lhs.layout(), |i, j| alpha * sa.get(i, j) + beta * sb.get(i, j));
        let scale = (alpha.abs() * sa.frobenius_norm() + beta.abs() * sb.frobenius_norm()).max(1e-300);
        prop_assert!(lhs.diff_norm(&rhs) <= 1e-12 * scale);
    }

    #[test]
    fn integer_countsketch_modes_agree_exactly(d in 1usize..=5000, n in 1usize..=8, k in 1usize..=300, seed: u64) {
        let op = CountSketch::new(d, k, &mut RngStream::new(seed, 0)).unwrap();
        let a = Matrix::from_fn(d, n, Layout::RowMajor, |i, j| {
            ((i.wrapping_mul(2654435761) ^ j.wrapping_mul(40503)) % (1 << 21)) as f64 - (1 << 20) as f64
        });
        let det = op.apply_deterministic(&a).unwrap();
        prop_assert_eq!(op.apply_atomic(&a).unwrap(), det.clone());
        let slow = brute_force_apply(&op, &a);
        if let Ok(slow) = slow {
            prop_assert_eq!(det, slow);
        }
    }
}

#[test]
fn countsketch_preserves_squared_norm_on_average() {
    let d = 2000;
    let x = Matrix::column(
        gaussian_fill::<f64>(d, 1, &mut RngStream::new(1, 1)).into_vec(),
        Layout::RowMajor,
    );
    let norm = x.frobenius_norm();
    let mut unit = x.clone();
    unit.scale_in_place(1.0 / norm);
    let mean: f64 = (0..200u64)
        .map(|seed| {
            let op = CountSketch::new(d, 64, &mut RngStream::new(seed, 0)).unwrap();
            op.apply_atomic(&unit).unwrap().frobenius_norm().powi(2)
        })
        .sum::<f64>()
        / 200.0;
    assert!((0.9..=1.1).contains(&mean), "mean {mean}");
}

#[test]
fn singular_values_stay_in_loose_band() {
    let (d, n) = (4096, 8);
    let cases = [
        (
            SketchKind::Gaussian,
            SketchDims {
                k: 16 * n,
                k2: None,
            },
        ),
        (
            SketchKind::Srht,
            SketchDims {
                k: 16 * n,
                k2: None,
            },
        ),
        (
            SketchKind::CountSketch,
            SketchDims {
                k: 8 * n * n,
                k2: None,
            },
        ),
    ];
    for (kind, dims) in cases {
        let good = (0..100u64)
            .filter(|&seed| {
                let op = kind
                    .build::<f64>(d, dims, &mut RngStream::new(seed, 1))
                    .unwrap();
                let rep = measure_distortion(&op, d, n, seed).unwrap();
                rep.sigma_min >= 0.1 && rep.sigma_max <= 1.9
            })
            .count();
        assert!(good >= 95, "{kind:?}: {good}/100");
    }
}

#[test]
fn deterministic_mode_ignores_thread_count() {
    let (d, n, k) = (50_000, 12, 700);
    let op = CountSketch::new(d, k, &mut RngStream::new(3, 0)).unwrap();
    let a = gaussian_fill::<f64>(d, n, &mut RngStream::new(3, 1));
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                (
                    op.apply_deterministic(&a).unwrap(),
                    op.apply_atomic(&a).unwrap(),
                )
            })
    };
    let max = std::thread::available_parallelism()
        .map_or(4, |p| p.get())
        .max(4);
    let (reference, _) = run(1);
    for threads in [1, 2, max] {
        let (det, atomic) = run(threads);
        assert_eq!(det.as_slice(), reference.as_slice());
        let anorm = a.frobenius_norm();
        for i in 0..k {
            let diff: f64 = det
                .row(i)
                .iter()
                .zip(atomic.row(i))
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            assert!(diff.sqrt() <= 1e-13 * anorm);
        }
    }
}

#[test]
fn operators_are_reproducible_from_their_stream() {
    for kind in SketchKind::ALL {
        let dims = kind.default_dims(4);
        let a = kind
            .build::<f64>(300, dims, &mut RngStream::new(9, 9))
            .unwrap()
            .densify()
            .unwrap();
        let b = kind
            .build::<f64>(300, dims, &mut RngStream::new(9, 9))
            .unwrap()
            .densify()
            .unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn blocked_apply_sums_block_products() {
    let d = 3001;
    let a = gaussian_fill::<f64>(d, 5, &mut RngStream::new(2, 2));
    let fam = BlockFamily::MultiSketch {
        k1: 64,
        stage2: Gaussian::new(10, 64, &mut RngStream::new(2, 3)).unwrap(),
    };
    let blocked = apply_blocked(&fam, &a, 3, 5).unwrap();
    // Σ C⁽ⁱ⁾A⁽ⁱ⁾ first, then the shared Gaussian stage.
    let parts = partition_rows(d, 3).unwrap();
    let mut sum = Matrix::zeros(64, 5, Layout::RowMajor);
    for (i, r) in parts.iter().enumerate() {
        let c = CountSketch::new(r.len(), 64, &mut RngStream::new(5, i as u64)).unwrap();
        let y = c.apply_deterministic(&a.row_block(r.start, r.end)).unwrap();
        sum.as_mut_slice()
            .iter_mut()
            .zip(y.as_slice())
            .for_each(|(s, v)| *s += v);
    }
    let BlockFamily::MultiSketch { stage2, .. } = &fam else {
        unreachable!()
    };
    let expect = stage2.apply(&sum).unwrap();
    assert!(blocked.rel_diff(&expect) < 1e-12);
    assert!(matches!(
        apply_blocked(&fam, &a, 0, 5),
        Err(sketchla::Error::Partition { .. })
    ));
    assert!(matches!(
        apply_blocked(&fam, &a, d + 1, 5),
        Err(sketchla::Error::Partition { .. })
    ));
}
