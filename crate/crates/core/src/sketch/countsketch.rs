//! CountSketch: each input row `j` is added to or subtracted from output row
//! `r[j]`, so `S` has exactly one `±1` per column.

use rayon::prelude::*;

use super::{check_densify, check_input, SketchOperator, SketchStats};
use crate::dense::{Layout, Matrix};
use crate::error::{Error, Result};
use crate::rng::{rademacher_fill, uniform_index_fill, RngStream};
use crate::scalar::Real;

const ROW_CHUNK: usize = 256;

/// How output rows are accumulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Accumulation {
    /// Parallel over input rows with lock-free atomic adds.
    #[default]
    Atomic,
    /// Parallel over output rows, summing in increasing input-row order.
    /// Bitwise reproducible for any thread count.
    Deterministic,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountSketch {
    k: usize,
    rows: Vec<u32>,
    signs: Vec<bool>,
    mode: Accumulation,
}

impl CountSketch {
    /// Draws the row map and then the signs from `stream`.
    pub fn new(d: usize, k: usize, stream: &mut RngStream) -> Result<Self> {
        if d == 0 || k == 0 {
            return Err(Error::Invalid(format!(
                "countsketch needs d ≥ 1 and k ≥ 1 (got d={d}, k={k})"
            )));
        }
        if k > u32::MAX as usize {
            return Err(Error::Invalid(format!(
                "countsketch output dimension {k} too large"
            )));
        }
        let rows = uniform_index_fill(d, k, stream);
        let signs = rademacher_fill(d, stream);
        Ok(CountSketch {
            k,
            rows,
            signs,
            mode: Accumulation::Atomic,
        })
    }

    /// Operator with an explicit row map and signs (`true` is `+1`).
    pub fn from_parts(k: usize, rows: Vec<u32>, signs: Vec<bool>) -> Result<Self> {
        if rows.len() != signs.len() || rows.is_empty() {
            return Err(Error::shape(
                "countsketch",
                format!("{} signs", rows.len()),
                signs.len(),
            ));
        }
        if let Some(&bad) = rows.iter().find(|&&r| r as usize >= k) {
            return Err(Error::Invalid(format!(
                "row index {bad} out of range for k={k}"
            )));
        }
        Ok(CountSketch {
            k,
            rows,
            signs,
            mode: Accumulation::Atomic,
        })
    }

    pub fn with_accumulation(mut self, mode: Accumulation) -> Self {
        self.mode = mode;
        self
    }

    pub fn accumulation(&self) -> Accumulation {
        self.mode
    }

    pub fn d(&self) -> usize {
        self.rows.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row_map(&self) -> &[u32] {
        &self.rows
    }

    pub fn signs(&self) -> &[bool] {
        &self.signs
    }

    /// Number of input rows landing in each output row.
    pub fn occupancy(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.k];
        for &r in &self.rows {
            counts[r as usize] += 1;
        }
        counts
    }

    /// Horizontal concatenation `[S₁ S₂ …]` of operators sharing `k`.
    pub fn concat(parts: &[CountSketch]) -> Result<Self> {
        let k = parts
            .first()
            .map(|p| p.k)
            .ok_or_else(|| Error::Invalid("empty concatenation".into()))?;
        if parts.iter().any(|p| p.k != k) {
            return Err(Error::Invalid(
                "concatenated countsketches must share k".into(),
            ));
        }
        let rows = parts.iter().flat_map(|p| p.rows.iter().copied()).collect();
        let signs = parts.iter().flat_map(|p| p.signs.iter().copied()).collect();
        CountSketch::from_parts(k, rows, signs)
    }

    /// `S·A` with atomic accumulation; `A` must be row-major.
    pub fn apply_atomic<T: Real>(&self, a: &Matrix<T>) -> Result<Matrix<T>> {
        check_input("countsketch", self.d(), Some(Layout::RowMajor), a)?;
        let n = a.cols();
        let acc: Vec<T::Atomic> = (0..self.k * n).map(|_| T::atomic_zero()).collect();
        if n > 0 {
            a.as_slice()
                .par_chunks(ROW_CHUNK * n)
                .enumerate()
                .for_each(|(c, block)| {
                    let first = c * ROW_CHUNK;
                    for (off, src) in block.chunks(n).enumerate() {
                        let j = first + off;
                        let dst = &acc[self.rows[j] as usize * n..][..n];
                        if self.signs[j] {
                            for (cell, &v) in dst.iter().zip(src) {
                                T::atomic_add(cell, v);
                            }
                        } else {
                            for (cell, &v) in dst.iter().zip(src) {
                                T::atomic_add(cell, -v);
                            }
                        }
                    }
                });
        }
        let data = acc.iter().map(T::atomic_load).collect();
        Matrix::from_vec(self.k, n, Layout::RowMajor, data)
    }

    /// `S·A` with each output row owned by one worker and summed in
    /// increasing input-row order; `A` must be row-major.
    pub fn apply_deterministic<T: Real>(&self, a: &Matrix<T>) -> Result<Matrix<T>> {
        check_input("countsketch", self.d(), Some(Layout::RowMajor), a)?;
        let n = a.cols();
        // Counting sort of input rows by target; stable, so each bucket is
        // in increasing j.
        let mut start = vec![0usize; self.k + 1];
        for &r in &self.rows {
            start[r as usize + 1] += 1;
        }
        for m in 0..self.k {
            start[m + 1] += start[m];
        }
        let mut fill = start.clone();
        let mut order = vec![0u32; self.d()];
        for (j, &r) in self.rows.iter().enumerate() {
            order[fill[r as usize]] = j as u32;
            fill[r as usize] += 1;
        }
        let mut y = Matrix::zeros(self.k, n, Layout::RowMajor);
        if n > 0 {
            let src = a.as_slice();
            y.as_mut_slice()
                .par_chunks_mut(n)
                .enumerate()
                .for_each(|(m, dst)| {
                    for &j in &order[start[m]..start[m + 1]] {
                        let j = j as usize;
                        let row = &src[j * n..(j + 1) * n];
                        if self.signs[j] {
                            dst.iter_mut().zip(row).for_each(|(y, &v)| *y += v);
                        } else {
                            dst.iter_mut().zip(row).for_each(|(y, &v)| *y -= v);
                        }
                    }
                });
        }
        Ok(y)
    }

    /// Analytic traffic: one read of `A`, one read-modify-write of the
    /// touched output entries counted as one write per input entry, plus the
    /// row map (4 bytes) and sign (1 byte) per input row.
    pub fn cost<T: Real>(&self, n: usize) -> (u64, u64) {
        let d = self.d() as u64;
        let n = n as u64;
        let bytes = 2 * d * n * T::BYTES as u64 + 5 * d;
        (bytes, d * n)
    }
}

impl<T: Real> SketchOperator<T> for CountSketch {
    fn name(&self) -> &'static str {
        "countsketch"
    }

    fn input_dim(&self) -> usize {
        self.d()
    }

    fn output_dim(&self) -> usize {
        self.k
    }

    fn input_layout(&self) -> Option<Layout> {
        Some(Layout::RowMajor)
    }

    fn apply_with_stats(&self, a: &Matrix<T>) -> Result<(Matrix<T>, SketchStats)> {
        let (bytes, flops) = self.cost::<T>(a.cols());
        let mut stats = SketchStats::default();
        let y = stats.time("apply", bytes, flops, || match self.mode {
            Accumulation::Atomic => self.apply_atomic(a),
            Accumulation::Deterministic => self.apply_deterministic(a),
        })?;
        Ok((y, stats))
    }

    fn densify(&self) -> Result<Matrix<T>> {
        check_densify("countsketch densify", self.k, self.d())?;
        let mut s = Matrix::zeros(self.k, self.d(), Layout::RowMajor);
        for (j, (&r, &sign)) in self.rows.iter().zip(&self.signs).enumerate() {
            s.set(r as usize, j, if sign { T::one() } else { -T::one() });
        }
        Ok(s)
    }
}
