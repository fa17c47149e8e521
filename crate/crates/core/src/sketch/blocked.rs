//! Row-block distributed application `S·A = Σᵢ S⁽ⁱ⁾·A⁽ⁱ⁾`.
//!
//! `A` is split into `p` contiguous row blocks and block `i` is sketched by
//! an independent operator drawn from stream `(seed, i)`. The per-block
//! results are reduced in block order. For the multisketch all blocks share
//! one Gaussian stage, so the CountSketch outputs are reduced first and the
//! Gaussian stage is applied once to the sum.

use std::ops::Range;

use super::multisketch::second_stage;
use super::{CountSketch, Gaussian, MultiSketch, SketchOperator, SketchStats};
use crate::dense::Matrix;
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::scalar::Real;

/// How per-block operators are drawn.
#[derive(Debug, Clone, PartialEq)]
pub enum BlockFamily<T: Real> {
    CountSketch {
        k: usize,
    },
    Gaussian {
        k: usize,
    },
    /// CountSketch blocks into `k1` rows sharing one Gaussian stage.
    MultiSketch {
        k1: usize,
        stage2: Gaussian<T>,
    },
}

/// Splits `0..rows` into `blocks` contiguous, nonempty, near-equal ranges.
pub fn partition_rows(rows: usize, blocks: usize) -> Result<Vec<Range<usize>>> {
    if blocks == 0 || blocks > rows {
        return Err(Error::Partition { rows, blocks });
    }
    Ok((0..blocks)
        .map(|i| i * rows / blocks..(i + 1) * rows / blocks)
        .collect())
}

impl<T: Real> BlockFamily<T> {
    fn stream(seed: u64, index: usize) -> RngStream {
        RngStream::new(seed, index as u64)
    }

    fn countsketch_block(k: usize, index: usize, rows: usize, seed: u64) -> Result<CountSketch> {
        CountSketch::new(rows, k, &mut Self::stream(seed, index))
    }

    fn gaussian_block(k: usize, index: usize, rows: usize, seed: u64) -> Result<Gaussian<T>> {
        Gaussian::new(k, rows, &mut Self::stream(seed, index))
    }

    /// Operator applied to block `index` of height `rows`.
    pub fn block_operator(
        &self,
        index: usize,
        rows: usize,
        seed: u64,
    ) -> Result<Box<dyn SketchOperator<T>>> {
        Ok(match self {
            BlockFamily::CountSketch { k } => {
                Box::new(Self::countsketch_block(*k, index, rows, seed)?)
            }
            BlockFamily::Gaussian { k } => Box::new(Self::gaussian_block(*k, index, rows, seed)?),
            BlockFamily::MultiSketch { k1, stage2 } => Box::new(MultiSketch::from_stages(
                Self::countsketch_block(*k1, index, rows, seed)?,
                stage2.clone(),
            )?),
        })
    }

    /// The single `k × d` operator `[S⁽¹⁾ … S⁽ᵖ⁾]` equivalent to the blocked apply.
    pub fn concatenated(
        &self,
        d: usize,
        p: usize,
        seed: u64,
    ) -> Result<Box<dyn SketchOperator<T>>> {
        let parts = partition_rows(d, p)?;
        Ok(match self {
            BlockFamily::CountSketch { k } => {
                let blocks = parts
                    .iter()
                    .enumerate()
                    .map(|(i, r)| Self::countsketch_block(*k, i, r.len(), seed))
                    .collect::<Result<Vec<_>>>()?;
                Box::new(CountSketch::concat(&blocks)?)
            }
            BlockFamily::Gaussian { k } => {
                let blocks = parts
                    .iter()
                    .enumerate()
                    .map(|(i, r)| Self::gaussian_block(*k, i, r.len(), seed))
                    .collect::<Result<Vec<_>>>()?;
                Box::new(Gaussian::concat(&blocks)?)
            }
            BlockFamily::MultiSketch { k1, stage2 } => {
                let blocks = parts
                    .iter()
                    .enumerate()
                    .map(|(i, r)| Self::countsketch_block(*k1, i, r.len(), seed))
                    .collect::<Result<Vec<_>>>()?;
                Box::new(MultiSketch::from_stages(
                    CountSketch::concat(&blocks)?,
                    stage2.clone(),
                )?)
            }
        })
    }
}

fn accumulate<T: Real>(total: &mut Option<Matrix<T>>, part: Matrix<T>) {
    match total {
        None => *total = Some(part),
        Some(acc) => {
            debug_assert_eq!(acc.layout(), part.layout());
            acc.as_mut_slice()
                .iter_mut()
                .zip(part.as_slice())
                .for_each(|(a, &b)| *a += b);
        }
    }
}

/// `Σᵢ S⁽ⁱ⁾·A⁽ⁱ⁾` over `p` row blocks of `A`.
pub fn apply_blocked<T: Real>(
    family: &BlockFamily<T>,
    a: &Matrix<T>,
    p: usize,
    seed: u64,
) -> Result<Matrix<T>> {
    let parts = partition_rows(a.rows(), p)?;
    let mut total = None;
    match family {
        BlockFamily::CountSketch { k } | BlockFamily::MultiSketch { k1: k, .. } => {
            for (i, r) in parts.iter().enumerate() {
                let op = BlockFamily::<T>::countsketch_block(*k, i, r.len(), seed)?;
                accumulate(&mut total, op.apply_atomic(&a.row_block(r.start, r.end))?);
            }
        }
        BlockFamily::Gaussian { k } => {
            for (i, r) in parts.iter().enumerate() {
                let op = BlockFamily::<T>::gaussian_block(*k, i, r.len(), seed)?;
                accumulate(&mut total, op.apply(&a.row_block(r.start, r.end))?);
            }
        }
    }
    let total = total.expect("at least one block");
    match family {
        BlockFamily::MultiSketch { stage2, .. } => {
            second_stage(stage2, total, &mut SketchStats::default())
        }
        _ => Ok(total),
    }
}
