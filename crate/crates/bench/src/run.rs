//! Experiment drivers.

use std::time::Instant;

use sketchla::dense::{matmul, Layout, Matrix, Transpose};
use sketchla::lsq::{self, LsqProblem};
use sketchla::rng::gaussian_fill;
use sketchla::sketch::{apply_converting, SketchDims, Srht};
use sketchla::{
    gen_problem, solve_normal_equations, solve_qr_reference, solve_randcholqr_lsq,
    solve_sketch_and_solve, Error, ProblemSpec, RngStream, SketchKind, SketchOperator,
};

use crate::config::{BenchConfig, Command, Method};
use crate::cost::{self, SketchShape};
use crate::record::{BenchRecord, RecordStatus, TOTAL_PHASE};

/// Stream id for operator draws; problem data uses ids 0 to 2.
pub const OPERATOR_STREAM: u64 = 16;

/// Runs `cfg` on a dedicated pool of `cfg.threads` workers, handing each
/// record to `sink` as soon as it exists. Only sink errors abort the run.
pub fn run<E>(
    cfg: &BenchConfig,
    sink: &mut (dyn FnMut(BenchRecord) -> Result<(), E> + Send),
) -> Result<(), E>
where
    E: Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .expect("thread pool");
    pool.install(|| match cfg.command {
        Command::Sketch => cmd_sketch(cfg, sink),
        Command::Lsq | Command::KappaSweep => cmd_lsq(cfg, sink),
    })
}

/// Collects every record of a run.
pub fn collect(cfg: &BenchConfig) -> Vec<BenchRecord> {
    let mut out = Vec::new();
    let _ = run::<()>(cfg, &mut |r| {
        out.push(r);
        Ok(())
    });
    out
}

fn rep_range(cfg: &BenchConfig) -> std::ops::RangeInclusive<usize> {
    0..=cfg.reps
}

/// Operator dimensions used by the harness.
pub fn sketch_shape(kind: SketchKind, d: usize, n: usize) -> SketchShape {
    let dims = kind.default_dims(n);
    SketchShape {
        kind,
        d,
        k1: dims.k,
        k2: dims.k2,
    }
}

fn build_operator(
    shape: &SketchShape,
    seed: u64,
    block_threshold: Option<usize>,
) -> sketchla::Result<Box<dyn SketchOperator<f64>>> {
    let mut stream = RngStream::new(seed, OPERATOR_STREAM);
    match (shape.kind, block_threshold) {
        (SketchKind::Srht, Some(b)) => Ok(Box::new(
            Srht::new(shape.d, shape.k1, &mut stream)?.with_block_threshold(b)?,
        )),
        _ => shape.kind.build(
            shape.d,
            SketchDims {
                k: shape.k1,
                k2: shape.k2,
            },
            &mut stream,
        ),
    }
}

/// Estimated peak footprint in bytes of one run.
fn footprint(method: Method, d: usize, n: usize, threads: usize) -> u64 {
    let (du, nu) = (d as u64, n as u64);
    let a = 8 * du * nu;
    let op = method.sketch_kind().map_or(0, |kind| {
        let s = sketch_shape(kind, d, n);
        let (k1, k2) = (s.k1 as u64, s.output_dim() as u64);
        let (cols, pad) = (nu + 1, d.next_power_of_two() as u64);
        match kind {
            SketchKind::Gaussian => 8 * k1 * (du + cols),
            SketchKind::CountSketch => 5 * du + 8 * k1 * cols,
            SketchKind::Srht => a + du + 8 * pad * threads as u64 + 8 * k1 * cols,
            SketchKind::MultiSketch => 5 * du + 8 * (k1 * cols + k1 * k2 + k2 * cols),
        }
    });
    let work = match method {
        Method::Gram => 8 * nu * nu,
        Method::Sketch(_) => 0,
        // gen_problem holds U and A together; solvers copy A once or twice.
        Method::Normal => 2 * a + 8 * nu * nu,
        Method::Sas(_) | Method::QrReference => 3 * a,
        Method::RandCholQr => 4 * a,
    };
    a + op + work
}

struct Ctx {
    method: String,
    d: usize,
    n: usize,
    k: Option<usize>,
    kappa: Option<f64>,
    seed: u64,
}

impl Ctx {
    fn record(
        &self,
        rep: usize,
        phase: &str,
        seconds: f64,
        cost: cost::Cost,
        residual: Option<f64>,
        status: RecordStatus,
    ) -> BenchRecord {
        BenchRecord {
            method: self.method.clone(),
            d: self.d,
            n: self.n,
            k: self.k,
            kappa: self.kappa,
            rep,
            seed: self.seed,
            phase: phase.to_string(),
            elapsed_seconds: seconds,
            bytes_moved: cost.0,
            flops: cost.1,
            relative_residual: residual,
            status,
        }
    }

    fn failure(&self, rep: usize, err: &Error) -> BenchRecord {
        let status = match err {
            Error::Capacity { .. } => RecordStatus::CapacityExceeded,
            _ => RecordStatus::Error,
        };
        eprintln!(
            "sketchbench: {} d={} n={} rep={rep}: {err}",
            self.method, self.d, self.n
        );
        self.record(rep, TOTAL_PHASE, 0.0, (0, 0), None, status)
    }

    fn over_limit(&self, rep: usize, need: u64, limit: u64) -> BenchRecord {
        eprintln!(
            "sketchbench: {} d={} n={}: needs about {} MiB, limit {} MiB",
            self.method,
            self.d,
            self.n,
            need >> 20,
            limit >> 20
        );
        self.record(
            rep,
            TOTAL_PHASE,
            0.0,
            (0, 0),
            None,
            RecordStatus::CapacityExceeded,
        )
    }
}

fn emit<E>(
    cfg: &BenchConfig,
    rep: usize,
    recs: Vec<BenchRecord>,
    sink: &mut (dyn FnMut(BenchRecord) -> Result<(), E> + Send),
) -> Result<(), E> {
    if rep == 0 && !cfg.keep_warmup {
        return Ok(());
    }
    recs.into_iter().try_for_each(sink)
}

fn total(
    ctx: &Ctx,
    rep: usize,
    recs: &[BenchRecord],
    residual: Option<f64>,
    status: RecordStatus,
) -> BenchRecord {
    let seconds = recs.iter().map(|r| r.elapsed_seconds).sum();
    let bytes = recs.iter().map(|r| r.bytes_moved).sum();
    let flops = recs.iter().map(|r| r.flops).sum();
    ctx.record(rep, TOTAL_PHASE, seconds, (bytes, flops), residual, status)
}

/// Sketch timing: for each shape and method, one seeded `A` and `reps`
/// timed applications (plus the warm-up).
pub fn cmd_sketch<E>(
    cfg: &BenchConfig,
    sink: &mut (dyn FnMut(BenchRecord) -> Result<(), E> + Send),
) -> Result<(), E> {
    for &d in &cfg.d {
        for &n in &cfg.n {
            let mut a: Option<Matrix<f64>> = None;
            for &method in &cfg.methods {
                let shape = method.sketch_kind().map(|k| sketch_shape(k, d, n));
                let ctx = Ctx {
                    method: method.name(),
                    d,
                    n,
                    k: shape.map(|s| s.output_dim()),
                    kappa: None,
                    seed: cfg.seed,
                };
                let need = footprint(method, d, n, cfg.threads);
                if need > cfg.memory_limit_bytes {
                    sink(ctx.over_limit(1, need, cfg.memory_limit_bytes))?;
                    continue;
                }
                let a =
                    a.get_or_insert_with(|| gaussian_fill(d, n, &mut RngStream::new(cfg.seed, 0)));
                for rep in rep_range(cfg) {
                    let recs = match sketch_once(cfg, &ctx, rep, a, method, shape.as_ref()) {
                        Ok(r) => r,
                        Err(e) => vec![ctx.failure(rep, &e)],
                    };
                    emit(cfg, rep, recs, sink)?;
                }
            }
        }
    }
    Ok(())
}

fn sketch_once(
    cfg: &BenchConfig,
    ctx: &Ctx,
    rep: usize,
    a: &Matrix<f64>,
    method: Method,
    shape: Option<&SketchShape>,
) -> sketchla::Result<Vec<BenchRecord>> {
    let ok = RecordStatus::Ok;
    let mut recs = Vec::new();
    match (method, shape) {
        (Method::Gram, _) => {
            let start = Instant::now();
            let g = matmul(a, Transpose::Yes, a, Transpose::No, Layout::ColMajor)?;
            let secs = start.elapsed().as_secs_f64();
            drop(g);
            recs.push(ctx.record(rep, "apply", secs, cost::gram(ctx.d, ctx.n), None, ok));
        }
        (_, Some(shape)) => {
            let start = Instant::now();
            let op = build_operator(shape, cfg.seed, cfg.block_threshold)?;
            let secs = start.elapsed().as_secs_f64();
            recs.push(ctx.record(rep, "generation", secs, shape.generation(), None, ok));
            let needs_copy = op.input_layout().is_some_and(|l| l != a.layout());
            let (_, stats) = if needs_copy {
                apply_converting(&op, a.clone())?
            } else {
                op.apply_with_stats(a)?
            };
            for p in stats.phases {
                recs.push(ctx.record(rep, p.name, p.seconds, (p.bytes, p.flops), None, ok));
            }
        }
        _ => unreachable!("sketch methods always carry a shape"),
    }
    recs.push(total(ctx, rep, &recs, None, ok));
    Ok(recs)
}

/// Least-squares runs over every `(d, n, κ)`; also drives the κ sweep.
pub fn cmd_lsq<E>(
    cfg: &BenchConfig,
    sink: &mut (dyn FnMut(BenchRecord) -> Result<(), E> + Send),
) -> Result<(), E> {
    for &d in &cfg.d {
        for &n in &cfg.n {
            for &kappa in &cfg.kappa {
                let mut problem: Option<sketchla::Result<LsqProblem<f64>>> = None;
                for &method in &cfg.methods {
                    let shape = method.sketch_kind().map(|k| sketch_shape(k, d, n));
                    let ctx = Ctx {
                        method: method.name(),
                        d,
                        n,
                        k: shape.map(|s| s.output_dim()),
                        kappa: Some(kappa),
                        seed: cfg.seed,
                    };
                    let need = footprint(method, d, n, cfg.threads);
                    if need > cfg.memory_limit_bytes {
                        sink(ctx.over_limit(1, need, cfg.memory_limit_bytes))?;
                        continue;
                    }
                    let problem = problem.get_or_insert_with(|| {
                        gen_problem(&ProblemSpec {
                            d,
                            n,
                            kappa,
                            noise: cfg.noise,
                            seed: cfg.seed,
                        })
                    });
                    let problem = match problem {
                        Ok(p) => p,
                        Err(e) => {
                            sink(ctx.failure(1, e))?;
                            continue;
                        }
                    };
                    for rep in rep_range(cfg) {
                        let recs = match solve_once(cfg, &ctx, rep, problem, method, shape.as_ref())
                        {
                            Ok(r) => r,
                            Err(e) => vec![ctx.failure(rep, &e)],
                        };
                        emit(cfg, rep, recs, sink)?;
                    }
                }
            }
        }
    }
    Ok(())
}

fn solve_once(
    cfg: &BenchConfig,
    ctx: &Ctx,
    rep: usize,
    problem: &LsqProblem<f64>,
    method: Method,
    shape: Option<&SketchShape>,
) -> sketchla::Result<Vec<BenchRecord>> {
    let mut recs = Vec::new();
    let mut generation = None;
    let op = match shape {
        Some(s) => {
            let start = Instant::now();
            let op = build_operator(s, cfg.seed, cfg.block_threshold)?;
            generation = Some((start.elapsed().as_secs_f64(), s.generation()));
            Some(op)
        }
        None => None,
    };
    let report: lsq::LsqReport<f64> = match (method, &op) {
        (Method::Normal, _) => solve_normal_equations(problem)?,
        (Method::QrReference, _) => solve_qr_reference(problem)?,
        (Method::Sas(_), Some(op)) => solve_sketch_and_solve(problem, op)?,
        (Method::RandCholQr, Some(op)) => solve_randcholqr_lsq(problem, op)?,
        _ => unreachable!("solver methods only"),
    };
    let residual = report.relative_residual;
    let status = RecordStatus::from(report.status);
    if let Some((secs, c)) = generation {
        recs.push(ctx.record(rep, "generation", secs, c, residual, status));
    }
    for p in &report.phases {
        let c = cost::solver_phase(p.name, ctx.d, ctx.n, shape);
        recs.push(ctx.record(rep, p.name, p.seconds, c, residual, status));
    }
    recs.push(total(ctx, rep, &recs, residual, status));
    Ok(recs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(args: &[&str]) -> BenchConfig {
        BenchConfig::try_parse_from(std::iter::once("sketchbench").chain(args.iter().copied()))
            .unwrap()
    }

    #[test]
    fn sketch_phases_and_totals() {
        let c = cfg(&[
            "sketch",
            "--d",
            "4096",
            "--n",
            "8",
            "--reps",
            "2",
            "--threads",
            "1",
        ]);
        let recs = collect(&c);
        for method in ["gram", "gaussian", "countsketch", "srht", "multisketch"] {
            let mine: Vec<_> = recs.iter().filter(|r| r.method == method).collect();
            assert!(mine
                .iter()
                .all(|r| r.rep >= 1 && r.status == RecordStatus::Ok));
            let totals: Vec<_> = mine.iter().filter(|r| r.phase == TOTAL_PHASE).collect();
            assert_eq!(totals.len(), 2, "{method}");
            for t in totals {
                let sum: f64 = mine
                    .iter()
                    .filter(|r| r.rep == t.rep && r.phase != TOTAL_PHASE)
                    .map(|r| r.elapsed_seconds)
                    .sum();
                assert!((sum - t.elapsed_seconds).abs() <= 1e-12 * sum.max(1.0));
                assert!(t.elapsed_seconds > 0.0);
            }
        }
        assert!(recs
            .iter()
            .any(|r| r.method == "srht" && r.phase == "layout"));
        assert!(recs
            .iter()
            .any(|r| r.method == "multisketch" && r.phase == "transpose"));
        assert_eq!(
            recs.iter().find(|r| r.method == "multisketch").unwrap().k,
            Some(16)
        );
    }

    #[test]
    fn warmup_is_dropped_unless_kept() {
        let base = [
            "lsq",
            "--d",
            "2048",
            "--n",
            "4",
            "--methods",
            "normal",
            "--reps",
            "1",
            "--threads",
            "1",
        ];
        assert!(collect(&cfg(&base)).iter().all(|r| r.rep == 1));
        let mut kept = base.to_vec();
        kept.push("--keep-warmup");
        let recs = collect(&cfg(&kept));
        assert!(recs.iter().any(|r| r.rep == 0));
        let res: Vec<_> = recs
            .iter()
            .filter(|r| r.phase == TOTAL_PHASE)
            .map(|r| r.relative_residual)
            .collect();
        assert_eq!(res[0], res[1]);
    }

    #[test]
    fn memory_limit_skips_cleanly() {
        let c = cfg(&[
            "sketch",
            "--d",
            "2^20",
            "--n",
            "64",
            "--methods",
            "gaussian,countsketch",
            "--memory-limit-mb",
            "600",
            "--reps",
            "1",
            "--threads",
            "1",
        ]);
        let recs = collect(&c);
        let g: Vec<_> = recs.iter().filter(|r| r.method == "gaussian").collect();
        assert_eq!(g.len(), 1);
        assert_eq!(g[0].status, RecordStatus::CapacityExceeded);
        assert!(recs
            .iter()
            .any(|r| r.method == "countsketch" && r.status == RecordStatus::Ok));
    }

    #[test]
    fn kappa_sweep_statuses() {
        let c = cfg(&[
            "kappa-sweep",
            "--d",
            "2^13",
            "--n",
            "8",
            "--kappa",
            "1e2,1e12",
            "--reps",
            "1",
        ]);
        let recs = collect(&c);
        let totals: Vec<_> = recs.iter().filter(|r| r.phase == TOTAL_PHASE).collect();
        assert_eq!(totals.len(), 8);
        for t in &totals {
            if t.kappa == Some(1e2) {
                assert_eq!(t.status, RecordStatus::Ok, "{}", t.method);
                assert!(t.relative_residual.unwrap() <= 1e-10, "{}", t.method);
            }
        }
        let normal = totals
            .iter()
            .find(|t| t.method == "normal" && t.kappa == Some(1e12))
            .unwrap();
        assert!(normal.status != RecordStatus::Ok || normal.relative_residual.unwrap() > 1e-2);
    }
}
