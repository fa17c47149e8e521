//! Command-line parsing and validation.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use sketchla::{NoiseMode, SketchKind};

/// Environment variable consulted for the thread count when `--threads` is absent.
pub const THREADS_ENV: &str = "SKETCHBENCH_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error(transparent)]
    Cli(#[from] clap::Error),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Parser)]
#[command(
    name = "sketchbench",
    version,
    about = "Timing and accuracy runs for sketching operators and least-squares solvers"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Time Gram formation against each sketch operator.
    Sketch(RunArgs),
    /// Time least-squares solvers and record their residuals.
    Lsq(RunArgs),
    /// Run the stability comparison over a grid of condition numbers.
    KappaSweep(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Row counts, comma separated (`65536` or `2^16`).
    #[arg(long, value_delimiter = ',', value_parser = parse_size)]
    pub d: Vec<usize>,
    /// Column counts, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_size)]
    pub n: Vec<usize>,
    /// Methods to run, comma separated. Defaults to every method of the command.
    #[arg(long, value_delimiter = ',')]
    pub methods: Vec<String>,
    /// Measured repetitions per configuration.
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads: a count, `auto` or `max`.
    #[arg(long, env = THREADS_ENV)]
    pub threads: Option<String>,
    /// Condition numbers, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub kappa: Vec<f64>,
    /// Right-hand side noise: consistent, easy or hard.
    #[arg(long)]
    pub noise: Option<String>,
    /// Block threshold (elements) for the Hadamard transform inside SRHT.
    #[arg(long)]
    pub block_threshold: Option<usize>,
    /// Output CSV path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Emit the warm-up repetition (rep 0) instead of discarding it.
    #[arg(long)]
    pub keep_warmup: bool,
    /// Runs whose estimated footprint exceeds this many MiB are recorded as
    /// `capacity_exceeded` and skipped.
    #[arg(long, default_value_t = 8192)]
    pub memory_limit_mb: u64,
}

/// Accepts plain integers and powers of two written `2^k`.
fn parse_size(s: &str) -> Result<usize, String> {
    let s = s.trim();
    if let Some(exp) = s.strip_prefix("2^") {
        let e: u32 = exp.parse().map_err(|_| format!("bad exponent in `{s}`"))?;
        return 1usize
            .checked_shl(e)
            .filter(|_| e < usize::BITS)
            .ok_or_else(|| format!("`{s}` overflows"));
    }
    s.parse().map_err(|_| format!("`{s}` is not a size"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Sketch,
    Lsq,
    KappaSweep,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::Sketch => "sketch",
            Command::Lsq => "lsq",
            Command::KappaSweep => "kappa-sweep",
        }
    }

    pub fn default_methods(self) -> Vec<Method> {
        use SketchKind::*;
        match self {
            Command::Sketch => vec![
                Method::Gram,
                Method::Sketch(Gaussian),
                Method::Sketch(CountSketch),
                Method::Sketch(Srht),
                Method::Sketch(MultiSketch),
            ],
            Command::Lsq => vec![
                Method::Normal,
                Method::Sas(Gaussian),
                Method::Sas(CountSketch),
                Method::Sas(MultiSketch),
                Method::RandCholQr,
                Method::QrReference,
            ],
            Command::KappaSweep => vec![
                Method::Normal,
                Method::Sas(MultiSketch),
                Method::RandCholQr,
                Method::QrReference,
            ],
        }
    }

    fn accepts(self, m: Method) -> bool {
        match self {
            Command::Sketch => matches!(m, Method::Gram | Method::Sketch(_)),
            Command::Lsq | Command::KappaSweep => !matches!(m, Method::Gram | Method::Sketch(_)),
        }
    }
}

/// A timed operation: a sketch-command method or a solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// `AᵀA` through GEMM.
    Gram,
    Sketch(SketchKind),
    Normal,
    /// Sketch-and-solve with the given operator family.
    Sas(SketchKind),
    /// Randomized Cholesky QR least squares (multisketch preconditioner).
    RandCholQr,
    QrReference,
}

impl Method {
    pub fn name(self) -> String {
        match self {
            Method::Gram => "gram".into(),
            Method::Sketch(k) => k.name().into(),
            Method::Normal => "normal".into(),
            Method::Sas(k) => format!("sas-{}", k.name()),
            Method::RandCholQr => "randcholqr".into(),
            Method::QrReference => "qr-reference".into(),
        }
    }

    /// Operator family drawn for this method, if any.
    pub fn sketch_kind(self) -> Option<SketchKind> {
        match self {
            Method::Sketch(k) | Method::Sas(k) => Some(k),
            Method::RandCholQr => Some(SketchKind::MultiSketch),
            _ => None,
        }
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "gram" => Method::Gram,
            "normal" => Method::Normal,
            "randcholqr" => Method::RandCholQr,
            "qr-reference" => Method::QrReference,
            _ => match s.strip_prefix("sas-") {
                Some(rest) => {
                    Method::Sas(rest.parse().map_err(|e: sketchla::Error| e.to_string())?)
                }
                None => Method::Sketch(s.parse().map_err(|e: sketchla::Error| e.to_string())?),
            },
        })
    }
}

/// A validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub command: Command,
    pub d: Vec<usize>,
    pub n: Vec<usize>,
    pub methods: Vec<Method>,
    pub reps: usize,
    pub seed: u64,
    pub threads: usize,
    pub kappa: Vec<f64>,
    pub noise: NoiseMode,
    pub block_threshold: Option<usize>,
    pub out: Option<PathBuf>,
    pub keep_warmup: bool,
    pub memory_limit_bytes: u64,
}

impl BenchConfig {
    /// Parses a full argument vector, program name first.
    pub fn try_parse_from<I, S>(args: I) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = S>,
        S: Into<std::ffi::OsString> + Clone,
    {
        let cli = Cli::try_parse_from(args)?;
        Self::from_cli(cli)
    }

    pub fn from_cli(cli: Cli) -> Result<Self, ConfigError> {
        match cli.command {
            CliCommand::Sketch(a) => Self::from_args(Command::Sketch, a),
            CliCommand::Lsq(a) => Self::from_args(Command::Lsq, a),
            CliCommand::KappaSweep(a) => Self::from_args(Command::KappaSweep, a),
        }
    }

    pub fn from_args(command: Command, args: RunArgs) -> Result<Self, ConfigError> {
        let sweep = command == Command::KappaSweep;
        let d = or_default(args.d, || {
            if sweep {
                vec![1 << 17]
            } else {
                vec![1 << 16, 1 << 18]
            }
        });
        let n = or_default(args.n, || {
            if sweep {
                vec![16]
            } else {
                vec![16, 32, 64, 128]
            }
        });
        let kappa = or_default(args.kappa, || {
            if sweep {
                (1..=7).map(|i| 100f64.powi(i)).collect()
            } else {
                vec![1e2]
            }
        });

        let methods = if args.methods.is_empty() {
            command.default_methods()
        } else {
            let mut out = Vec::new();
            for s in &args.methods {
                let m: Method = s
                    .trim()
                    .parse()
                    .map_err(|e| invalid(format!("--methods: {e}")))?;
                if !command.accepts(m) {
                    return Err(invalid(format!(
                        "method `{s}` does not apply to `{}`",
                        command.as_str()
                    )));
                }
                if !out.contains(&m) {
                    out.push(m);
                }
            }
            out
        };

        if args.reps == 0 {
            return Err(invalid("--reps must be at least 1"));
        }
        if let Some(&bad) = d.iter().chain(&n).find(|&&v| v == 0) {
            return Err(invalid(format!("sizes must be positive (got {bad})")));
        }
        let (dmin, nmax) = (*d.iter().min().unwrap(), *n.iter().max().unwrap());
        if dmin < nmax {
            return Err(invalid(format!(
                "every d must be at least every n (d={dmin}, n={nmax})"
            )));
        }
        if let Some(bad) = kappa.iter().find(|k| !(k.is_finite() && **k >= 1.0)) {
            return Err(invalid(format!(
                "--kappa values must be finite and ≥ 1 (got {bad})"
            )));
        }
        if let Some(b) = args.block_threshold {
            if b < 2 || !b.is_power_of_two() {
                return Err(invalid(format!(
                    "--block-threshold must be a power of two ≥ 2 (got {b})"
                )));
            }
        }
        let noise = match args.noise.as_deref() {
            Some(s) => s
                .parse()
                .map_err(|e: sketchla::Error| invalid(format!("--noise: {e}")))?,
            None if sweep => NoiseMode::Consistent,
            None => NoiseMode::Easy,
        };
        let threads = resolve_threads(args.threads.as_deref())?;

        Ok(BenchConfig {
            command,
            d,
            n,
            methods,
            reps: args.reps,
            seed: args.seed,
            threads,
            kappa,
            noise,
            block_threshold: args.block_threshold,
            out: args.out,
            keep_warmup: args.keep_warmup,
            memory_limit_bytes: args.memory_limit_mb.saturating_mul(1 << 20),
        })
    }
}

fn or_default<T>(v: Vec<T>, f: impl FnOnce() -> Vec<T>) -> Vec<T> {
    if v.is_empty() {
        f()
    } else {
        v
    }
}

fn hardware_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn resolve_threads(spec: Option<&str>) -> Result<usize, ConfigError> {
    match spec.map(str::trim) {
        None | Some("auto") => Ok(rayon::current_num_threads().max(1)),
        Some("max") => Ok(hardware_threads()),
        Some(s) => match s.parse::<usize>() {
            Ok(t) if t >= 1 => Ok(t),
            _ => Err(invalid(format!(
                "--threads must be a positive count, `auto` or `max` (got `{s}`)"
            ))),
        },
    }
}
