//! Random sketching operators `S: ℝᵈ → ℝᵏ` applied to tall matrices.
//!
//! Every operator states the storage order it expects for its input and
//! rejects anything else with [`Error::Layout`]. Callers that hold data in
//! the other order convert explicitly, for example through
//! [`apply_converting`], so the cost of a transpose always shows up where it
//! is paid.

mod blocked;
mod countsketch;
mod gaussian;
mod identity;
mod multisketch;
mod srht;

use std::time::Instant;

pub use blocked::{apply_blocked, partition_rows, BlockFamily};
pub use countsketch::{Accumulation, CountSketch};
pub use gaussian::Gaussian;
pub use identity::ScaledIdentity;
pub use multisketch::MultiSketch;
pub use srht::Srht;

use crate::dense::{transpose_to_layout, Layout, Matrix};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Real;

/// Largest `k·d` that [`SketchOperator::densify`] will materialize.
pub const DENSIFY_LIMIT: usize = 1 << 24;

/// Timing and analytic cost of one named phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseStat {
    pub name: &'static str,
    pub seconds: f64,
    pub bytes: u64,
    pub flops: u64,
}

/// Per-phase breakdown of an operator application.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SketchStats {
    pub phases: Vec<PhaseStat>,
}

impl SketchStats {
    pub fn push(&mut self, name: &'static str, seconds: f64, bytes: u64, flops: u64) {
        self.phases.push(PhaseStat {
            name,
            seconds,
            bytes,
            flops,
        });
    }

    /// Runs `f`, recording its wall time under `name`.
    pub fn time<R>(
        &mut self,
        name: &'static str,
        bytes: u64,
        flops: u64,
        f: impl FnOnce() -> R,
    ) -> R {
        let start = Instant::now();
        let out = f();
        self.push(name, start.elapsed().as_secs_f64(), bytes, flops);
        out
    }

    pub fn extend(&mut self, other: SketchStats) {
        self.phases.extend(other.phases);
    }

    pub fn phase(&self, name: &str) -> Option<&PhaseStat> {
        self.phases.iter().find(|p| p.name == name)
    }

    pub fn total_seconds(&self) -> f64 {
        self.phases.iter().map(|p| p.seconds).sum()
    }

    pub fn total_bytes(&self) -> u64 {
        self.phases.iter().map(|p| p.bytes).sum()
    }

    pub fn total_flops(&self) -> u64 {
        self.phases.iter().map(|p| p.flops).sum()
    }
}

/// A linear map from `input_dim` to `output_dim` rows.
pub trait SketchOperator<T: Real>: Send + Sync {
    fn name(&self) -> &'static str;

    fn input_dim(&self) -> usize;

    fn output_dim(&self) -> usize;

    /// Required input storage order, or `None` when any order is accepted.
    fn input_layout(&self) -> Option<Layout>;

    /// Computes `S·A` along with a per-phase cost breakdown.
    fn apply_with_stats(&self, a: &Matrix<T>) -> Result<(Matrix<T>, SketchStats)>;

    /// Explicit `k × d` matrix of the operator.
    fn densify(&self) -> Result<Matrix<T>>;

    fn apply(&self, a: &Matrix<T>) -> Result<Matrix<T>> {
        Ok(self.apply_with_stats(a)?.0)
    }

    /// `S·b` for a single vector.
    fn apply_vec(&self, b: &[T]) -> Result<Vec<T>> {
        let layout = self.input_layout().unwrap_or(Layout::ColMajor);
        let col = Matrix::column(b.to_vec(), layout);
        Ok(self.apply(&col)?.into_vec())
    }
}

impl<T: Real, O: SketchOperator<T> + ?Sized> SketchOperator<T> for Box<O> {
    fn name(&self) -> &'static str {
        (**self).name()
    }
    fn input_dim(&self) -> usize {
        (**self).input_dim()
    }
    fn output_dim(&self) -> usize {
        (**self).output_dim()
    }
    fn input_layout(&self) -> Option<Layout> {
        (**self).input_layout()
    }
    fn apply_with_stats(&self, a: &Matrix<T>) -> Result<(Matrix<T>, SketchStats)> {
        (**self).apply_with_stats(a)
    }
    fn densify(&self) -> Result<Matrix<T>> {
        (**self).densify()
    }
}

/// Converts `a` to the operator's input layout (recorded as a `layout`
/// phase, possibly free) and applies the operator.
pub fn apply_converting<T: Real, O: SketchOperator<T> + ?Sized>(
    op: &O,
    a: Matrix<T>,
) -> Result<(Matrix<T>, SketchStats)> {
    let mut stats = SketchStats::default();
    let a = match op.input_layout() {
        Some(target) => {
            let start = Instant::now();
            let (converted, copied) = transpose_to_layout(a, target);
            stats.push(
                "layout",
                start.elapsed().as_secs_f64(),
                2 * (copied * T::BYTES) as u64,
                0,
            );
            converted
        }
        None => a,
    };
    let (y, inner) = op.apply_with_stats(&a)?;
    stats.extend(inner);
    Ok((y, stats))
}

pub(crate) fn check_input<T: Real>(
    op: &'static str,
    input_dim: usize,
    layout: Option<Layout>,
    a: &Matrix<T>,
) -> Result<()> {
    if a.rows() != input_dim {
        return Err(Error::shape(op, format!("{input_dim} rows"), a.rows()));
    }
    if let Some(expected) = layout {
        // Single columns are stored identically in both orders.
        if a.layout() != expected && a.cols() != 1 {
            return Err(Error::Layout {
                op,
                expected,
                got: a.layout(),
            });
        }
    }
    Ok(())
}

pub(crate) fn check_densify(op: &'static str, k: usize, d: usize) -> Result<()> {
    let requested = k.saturating_mul(d);
    if requested > DENSIFY_LIMIT {
        return Err(Error::Capacity {
            op,
            requested,
            limit: DENSIFY_LIMIT,
        });
    }
    Ok(())
}

/// The operator families compared throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SketchKind {
    Gaussian,
    CountSketch,
    Srht,
    MultiSketch,
}

/// Output dimensions for an operator family: `(k, None)` for single-stage
/// operators, `(k₁, Some(k₂))` for the multisketch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SketchDims {
    pub k: usize,
    pub k2: Option<usize>,
}

impl SketchKind {
    pub const ALL: [SketchKind; 4] = [
        SketchKind::Gaussian,
        SketchKind::CountSketch,
        SketchKind::Srht,
        SketchKind::MultiSketch,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SketchKind::Gaussian => "gaussian",
            SketchKind::CountSketch => "countsketch",
            SketchKind::Srht => "srht",
            SketchKind::MultiSketch => "multisketch",
        }
    }

    /// Default embedding dimensions for an `n`-column problem: `2n` for
    /// dense sketches, `2n²` for CountSketch, `(2n², 2n)` for the multisketch.
    pub fn default_dims(self, n: usize) -> SketchDims {
        match self {
            SketchKind::Gaussian | SketchKind::Srht => SketchDims { k: 2 * n, k2: None },
            SketchKind::CountSketch => SketchDims {
                k: 2 * n * n,
                k2: None,
            },
            SketchKind::MultiSketch => SketchDims {
                k: 2 * n * n,
                k2: Some(2 * n),
            },
        }
    }

    /// Draws an operator of this family from `stream`.
    pub fn build<T: Real>(
        self,
        d: usize,
        dims: SketchDims,
        stream: &mut RngStream,
    ) -> Result<Box<dyn SketchOperator<T>>> {
        Ok(match self {
            SketchKind::Gaussian => Box::new(Gaussian::new(dims.k, d, stream)?),
            SketchKind::CountSketch => Box::new(CountSketch::new(d, dims.k, stream)?),
            SketchKind::Srht => Box::new(Srht::new(d, dims.k, stream)?),
            SketchKind::MultiSketch => {
                let k2 = dims.k2.ok_or_else(|| {
                    Error::Invalid("multisketch needs a second-stage dimension".into())
                })?;
                Box::new(MultiSketch::new(d, dims.k, k2, stream)?)
            }
        })
    }
}

impl std::str::FromStr for SketchKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SketchKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown sketch family `{s}`")))
    }
}
