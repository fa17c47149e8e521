//! Subsampled randomized Hadamard transform `S = k^{-1/2}·P·H·D`.
//!
//! Inputs with a non-power-of-two `d` are zero-padded to `d_pad`; the padded
//! coordinates carry no mass, so inner products are unchanged. Each column is
//! signed, padded, transformed and gathered in one pass through a per-worker
//! scratch buffer, so the padded `d_pad × n` matrix is never materialized.

use rayon::prelude::*;

use super::{check_densify, check_input, SketchOperator, SketchStats};
use crate::dense::{Layout, Matrix};
use crate::error::{Error, Result};
use crate::fwht::{fwht_inplace, FwhtPlan, MemoryTraffic};
use crate::rng::{rademacher_fill, uniform_index_fill, RngStream};
use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Srht<T: Real> {
    signs: Vec<bool>,
    sample: Vec<u32>,
    scale: T,
    plan: FwhtPlan,
}

fn padded_len(d: usize) -> usize {
    d.next_power_of_two().max(2)
}

impl<T: Real> Srht<T> {
    /// Draws the signs and then `k` sampled rows (with replacement) from `stream`.
    pub fn new(d: usize, k: usize, stream: &mut RngStream) -> Result<Self> {
        if d == 0 || k == 0 {
            return Err(Error::Invalid(format!(
                "srht needs d ≥ 1 and k ≥ 1 (got d={d}, k={k})"
            )));
        }
        let signs = rademacher_fill(d, stream);
        let sample = uniform_index_fill(k, padded_len(d), stream);
        Self::from_parts(signs, sample)
    }

    /// Operator with explicit signs (length `d`, `true` is `+1`) and sampled
    /// rows of the padded transform.
    pub fn from_parts(signs: Vec<bool>, sample: Vec<u32>) -> Result<Self> {
        if signs.is_empty() || sample.is_empty() {
            return Err(Error::Invalid(
                "srht needs nonempty signs and sample".into(),
            ));
        }
        let d_pad = padded_len(signs.len());
        if let Some(&bad) = sample.iter().find(|&&i| i as usize >= d_pad) {
            return Err(Error::Invalid(format!(
                "sampled row {bad} out of range for {d_pad}"
            )));
        }
        let scale = T::one() / T::lit(sample.len() as f64).sqrt();
        Ok(Srht {
            signs,
            sample,
            scale,
            plan: FwhtPlan::new(d_pad)?,
        })
    }

    pub fn with_block_threshold(mut self, block_threshold: usize) -> Result<Self> {
        self.plan =
            FwhtPlan::with_block_threshold(self.d_pad(), block_threshold.min(self.d_pad()))?;
        Ok(self)
    }

    pub fn d(&self) -> usize {
        self.signs.len()
    }

    pub fn d_pad(&self) -> usize {
        self.plan.len()
    }

    pub fn k(&self) -> usize {
        self.sample.len()
    }

    pub fn signs(&self) -> &[bool] {
        &self.signs
    }

    pub fn sample(&self) -> &[u32] {
        &self.sample
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    pub fn plan(&self) -> &FwhtPlan {
        &self.plan
    }
}

impl<T: Real> SketchOperator<T> for Srht<T> {
    fn name(&self) -> &'static str {
        "srht"
    }

    fn input_dim(&self) -> usize {
        self.d()
    }

    fn output_dim(&self) -> usize {
        self.k()
    }

    fn input_layout(&self) -> Option<Layout> {
        Some(Layout::ColMajor)
    }

    fn apply_with_stats(&self, a: &Matrix<T>) -> Result<(Matrix<T>, SketchStats)> {
        check_input("srht", self.d(), Some(Layout::ColMajor), a)?;
        let (d, d_pad, k, n) = (self.d(), self.d_pad(), self.k(), a.cols());
        let mut stats = SketchStats::default();
        let start = std::time::Instant::now();
        let mut y = Matrix::zeros(k, n, Layout::ColMajor);
        let traffic: Vec<MemoryTraffic> = y
            .as_mut_slice()
            .par_chunks_mut(k)
            .zip(a.as_slice().par_chunks(d))
            .map_init(
                || vec![T::zero(); d_pad],
                |buf, (out, col)| {
                    for ((b, &x), &s) in buf.iter_mut().zip(col).zip(&self.signs) {
                        *b = if s { x } else { -x };
                    }
                    buf[d..].iter_mut().for_each(|b| *b = T::zero());
                    let t = fwht_inplace(buf, &self.plan).expect("plan matches scratch length");
                    for (o, &i) in out.iter_mut().zip(&self.sample) {
                        *o = buf[i as usize] * self.scale;
                    }
                    t
                },
            )
            .collect();
        let fwht_elems: u64 = traffic.iter().map(|t| t.total()).sum();
        let bytes = (fwht_elems + ((d + k) * n) as u64) * T::BYTES as u64 + d as u64;
        let log = d_pad.trailing_zeros() as u64;
        let flops = n as u64 * (d_pad as u64 * log + k as u64);
        stats.push("apply", start.elapsed().as_secs_f64(), bytes, flops);
        Ok((y, stats))
    }

    fn densify(&self) -> Result<Matrix<T>> {
        check_densify("srht densify", self.k(), self.d())?;
        Ok(Matrix::from_fn(
            self.k(),
            self.d(),
            Layout::RowMajor,
            |i, j| {
                let row = self.sample[i] as usize;
                let h = if (row & j).count_ones().is_multiple_of(2) {
                    self.scale
                } else {
                    -self.scale
                };
                if self.signs[j] {
                    h
                } else {
                    -h
                }
            },
        ))
    }
}
