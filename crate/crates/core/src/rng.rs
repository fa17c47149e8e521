//! Reproducible random streams.
//!
//! An [`RngStream`] is a ChaCha8 keystream selected by `(seed, stream_id)`
//! plus a word counter. Every fill reserves a contiguous range of keystream
//! words and generates it in fixed-size chunks, each chunk seeking directly
//! to its own offset. The values therefore depend only on the seed, the
//! stream id and the sequence of fills, never on how chunks are scheduled
//! across threads.
//!
//! Standard normals use the Box–Muller transform: two 53-bit uniforms
//! `u1 ∈ (0, 1]`, `u2 ∈ [0, 1)` give `√(−2 ln u1)·(cos 2πu2, sin 2πu2)`.
//! Bounded indices use the 64-bit multiply-high map `⌊x·k / 2⁶⁴⌋`, whose bias
//! is below `k / 2⁶⁴`.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dense::{Layout, Matrix};
use crate::scalar::Real;

const CHUNK: usize = 4096;
const TWO_POW_M53: f64 = 1.0 / (1u64 << 53) as f64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    word_pos: u128,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        RngStream {
            seed,
            stream_id,
            word_pos: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Keystream words (32-bit) consumed so far.
    pub fn position(&self) -> u128 {
        self.word_pos
    }

    fn reserve(&mut self, words: u128) -> u128 {
        let start = self.word_pos;
        self.word_pos += words;
        start
    }

    fn generator_at(&self, word: u128) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng.set_word_pos(word);
        rng
    }
}

#[inline]
fn box_muller(x: u64, y: u64) -> (f64, f64) {
    let u1 = ((x >> 11) + 1) as f64 * TWO_POW_M53;
    let u2 = (y >> 11) as f64 * TWO_POW_M53;
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
    (r * c, r * s)
}

/// `len` standard normal variates.
pub fn gaussian_vec<T: Real>(len: usize, stream: &mut RngStream) -> Vec<T> {
    // Each pair of outputs consumes two u64 draws (four keystream words).
    let pairs = len.div_ceil(2);
    let start = stream.reserve(4 * pairs as u128);
    let mut out = vec![T::zero(); len];
    out.par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(c, chunk)| {
            let first_pair = c * CHUNK / 2;
            let mut rng = stream.generator_at(start + 4 * first_pair as u128);
            for pair in chunk.chunks_mut(2) {
                let (z0, z1) = box_muller(rng.next_u64(), rng.next_u64());
                pair[0] = T::lit(z0);
                if let Some(slot) = pair.get_mut(1) {
                    *slot = T::lit(z1);
                }
            }
        });
    out
}

/// `rows × cols` row-major matrix of i.i.d. standard normals, filled in
/// storage order.
pub fn gaussian_fill<T: Real>(rows: usize, cols: usize, stream: &mut RngStream) -> Matrix<T> {
    let data = gaussian_vec(rows * cols, stream);
    Matrix::from_vec(rows, cols, Layout::RowMajor, data).expect("length matches")
}

/// `len` equiprobable signs; `true` means `+1`.
pub fn rademacher_fill(len: usize, stream: &mut RngStream) -> Vec<bool> {
    let words = len.div_ceil(32);
    let start = stream.reserve(words as u128);
    let mut out = vec![false; len];
    out.par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(c, chunk)| {
            let mut rng = stream.generator_at(start + (c * CHUNK / 32) as u128);
            for bits in chunk.chunks_mut(32) {
                let w = rng.next_u32();
                for (b, slot) in bits.iter_mut().enumerate() {
                    *slot = (w >> b) & 1 == 1;
                }
            }
        });
    out
}

/// `len` indices uniform over `0..k`. Panics when `k == 0` or `k > u32::MAX`.
pub fn uniform_index_fill(len: usize, k: usize, stream: &mut RngStream) -> Vec<u32> {
    assert!(k >= 1, "uniform_index_fill: k must be at least 1");
    assert!(
        k <= u32::MAX as usize,
        "uniform_index_fill: k exceeds u32 range"
    );
    let start = stream.reserve(2 * len as u128);
    let k = k as u128;
    let mut out = vec![0u32; len];
    out.par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(c, chunk)| {
            let mut rng = stream.generator_at(start + 2 * (c * CHUNK) as u128);
            for slot in chunk {
                *slot = ((rng.next_u64() as u128 * k) >> 64) as u32;
            }
        });
    out
}
