//! Radix-4 fast Walsh–Hadamard transform.
//!
//! Computes the unnormalized `H_d·x` for the Sylvester-ordered Hadamard
//! matrix (`H_2 = [[1, 1], [1, −1]]`, `H_2ℓ = [[H_ℓ, H_ℓ], [H_ℓ, −H_ℓ]]`).
//! Radix-4 stages run with strides `d/4, d/16, …`; when `log₂ d` is odd a
//! single radix-2 stage with stride 1 closes the sequence, so that it always
//! falls inside the block-local phase.
//!
//! Stages whose butterfly span exceeds the plan's block threshold sweep the
//! whole vector ("global" passes). Every remaining stage is then applied
//! block by block on spans of `block_threshold` elements that stay resident
//! in cache, so those stages cost a single read and write of the vector.

use rayon::prelude::*;

use crate::dense::{Layout, Matrix};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default block-local span, in elements.
pub const DEFAULT_BLOCK_THRESHOLD: usize = 32_768;

const PAR_MIN_LEN: usize = 1 << 15;
const PAR_MIN_STRIDE: usize = 1 << 13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Radix {
    Two,
    Four,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Stage {
    radix: Radix,
    stride: usize,
}

impl Stage {
    fn span(self) -> usize {
        match self.radix {
            Radix::Two => 2 * self.stride,
            Radix::Four => 4 * self.stride,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FwhtPlan {
    len: usize,
    block_threshold: usize,
    stages: Vec<Stage>,
}

/// Element reads and writes against the full vector, as counted by the
/// instrumented executor.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MemoryTraffic {
    pub reads: u64,
    pub writes: u64,
}

impl MemoryTraffic {
    pub fn total(&self) -> u64 {
        self.reads + self.writes
    }
}

impl std::ops::AddAssign for MemoryTraffic {
    fn add_assign(&mut self, rhs: Self) {
        self.reads += rhs.reads;
        self.writes += rhs.writes;
    }
}

impl FwhtPlan {
    /// Plan for length `len` with the default block threshold (clamped to `len`).
    pub fn new(len: usize) -> Result<Self> {
        Self::with_block_threshold(len, DEFAULT_BLOCK_THRESHOLD.min(len))
    }

    pub fn with_block_threshold(len: usize, block_threshold: usize) -> Result<Self> {
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::shape("FwhtPlan", "power-of-two length ≥ 2", len));
        }
        if block_threshold == 0 || !block_threshold.is_power_of_two() || block_threshold > len {
            return Err(Error::Invalid(format!(
                "block threshold {block_threshold} must be a power of two no larger than {len}"
            )));
        }
        let log2 = len.trailing_zeros();
        let mut stages = Vec::new();
        let mut stride = len / 4;
        // Radix-4 down to stride 1 (even log) or stride 2 (odd log).
        while stride >= 1 && stride * 4 <= len && (log2.is_multiple_of(2) || stride >= 2) {
            stages.push(Stage {
                radix: Radix::Four,
                stride,
            });
            stride /= 4;
        }
        if log2 % 2 == 1 {
            stages.push(Stage {
                radix: Radix::Two,
                stride: 1,
            });
        }
        Ok(FwhtPlan {
            len,
            block_threshold,
            stages,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn block_threshold(&self) -> usize {
        self.block_threshold
    }

    /// Radix and stride of each stage, in execution order.
    pub fn stages(&self) -> Vec<(Radix, usize)> {
        self.stages.iter().map(|s| (s.radix, s.stride)).collect()
    }

    fn split_point(&self) -> usize {
        self.stages
            .iter()
            .position(|s| s.span() <= self.block_threshold)
            .unwrap_or(self.stages.len())
    }

    /// Number of full-vector passes before the block-local phase.
    pub fn global_passes(&self) -> usize {
        self.split_point()
    }
}

#[inline]
fn radix4_group<T: Real>(g: &mut [T], stride: usize) {
    let (lo, hi) = g.split_at_mut(2 * stride);
    let (q0, q1) = lo.split_at_mut(stride);
    let (q2, q3) = hi.split_at_mut(stride);
    radix4_lanes(q0, q1, q2, q3);
}

#[inline]
fn radix4_lanes<T: Real>(q0: &mut [T], q1: &mut [T], q2: &mut [T], q3: &mut [T]) {
    for (((a, b), c), d) in q0
        .iter_mut()
        .zip(q1.iter_mut())
        .zip(q2.iter_mut())
        .zip(q3.iter_mut())
    {
        let (x, y, z, t) = (*a, *b, *c, *d);
        let sx = x + z;
        let sy = y + t;
        let dx = x - z;
        let dy = y - t;
        *a = sx + sy;
        *b = sx - sy;
        *c = dx + dy;
        *d = dx - dy;
    }
}

#[inline]
fn radix2_group<T: Real>(g: &mut [T], stride: usize) {
    let (lo, hi) = g.split_at_mut(stride);
    for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
        let (x, y) = (*a, *b);
        *a = x + y;
        *b = x - y;
    }
}

fn run_stage_seq<T: Real>(a: &mut [T], stage: Stage) {
    let span = stage.span();
    for g in a.chunks_mut(span) {
        match stage.radix {
            Radix::Four => radix4_group(g, stage.stride),
            Radix::Two => radix2_group(g, stage.stride),
        }
    }
}

fn run_stage_par<T: Real>(a: &mut [T], stage: Stage) {
    let span = stage.span();
    if stage.stride >= PAR_MIN_STRIDE && stage.radix == Radix::Four {
        // Few large groups: split each group's quarter lanes across workers.
        for g in a.chunks_mut(span) {
            let (lo, hi) = g.split_at_mut(2 * stage.stride);
            let (q0, q1) = lo.split_at_mut(stage.stride);
            let (q2, q3) = hi.split_at_mut(stage.stride);
            const LANE: usize = 2048;
            q0.par_chunks_mut(LANE)
                .zip(q1.par_chunks_mut(LANE))
                .zip(q2.par_chunks_mut(LANE))
                .zip(q3.par_chunks_mut(LANE))
                .for_each(|(((a, b), c), d)| radix4_lanes(a, b, c, d));
        }
    } else {
        a.par_chunks_mut(span.max(PAR_MIN_STRIDE))
            .for_each(|chunk| run_stage_seq(chunk, stage));
    }
}

fn execute<T: Real>(a: &mut [T], plan: &FwhtPlan, parallel: bool) -> MemoryTraffic {
    let n = plan.len as u64;
    let split = plan.split_point();
    let mut traffic = MemoryTraffic::default();
    for &stage in &plan.stages[..split] {
        if parallel {
            run_stage_par(a, stage);
        } else {
            run_stage_seq(a, stage);
        }
        traffic += MemoryTraffic {
            reads: n,
            writes: n,
        };
    }
    let local = &plan.stages[split..];
    if !local.is_empty() {
        let block = plan.block_threshold;
        let run_block = |blk: &mut [T]| {
            for &stage in local {
                run_stage_seq(blk, stage);
            }
        };
        if parallel {
            a.par_chunks_mut(block).for_each(run_block);
        } else {
            a.chunks_mut(block).for_each(run_block);
        }
        traffic += MemoryTraffic {
            reads: n,
            writes: n,
        };
    }
    traffic
}

/// Replaces `a` with `H_d·a` and reports the full-vector memory traffic.
pub fn fwht_inplace<T: Real>(a: &mut [T], plan: &FwhtPlan) -> Result<MemoryTraffic> {
    if !a.len().is_power_of_two() || a.len() < 2 {
        return Err(Error::shape("fwht", "power-of-two length ≥ 2", a.len()));
    }
    if a.len() != plan.len {
        return Err(Error::shape("fwht", plan.len, a.len()));
    }
    Ok(execute(a, plan, a.len() >= PAR_MIN_LEN))
}

/// Transforms every column of a column-major `d × n` matrix. Columns are
/// independent and processed in parallel.
pub fn fwht_matrix<T: Real>(a: &mut Matrix<T>, plan: &FwhtPlan) -> Result<MemoryTraffic> {
    if a.layout() != Layout::ColMajor {
        return Err(Error::Layout {
            op: "fwht_matrix",
            expected: Layout::ColMajor,
            got: a.layout(),
        });
    }
    if a.rows() != plan.len {
        return Err(Error::shape(
            "fwht_matrix",
            format!("{} rows", plan.len),
            a.rows(),
        ));
    }
    let d = plan.len;
    let cols = a.cols();
    if cols == 0 {
        return Ok(MemoryTraffic::default());
    }
    let nested = cols < rayon::current_num_threads() && d >= PAR_MIN_LEN;
    let per_col: Vec<MemoryTraffic> = a
        .as_mut_slice()
        .par_chunks_mut(d)
        .map(|col| execute(col, plan, nested))
        .collect();
    let mut total = MemoryTraffic::default();
    for t in per_col {
        total += t;
    }
    Ok(total)
}
