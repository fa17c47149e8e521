//! Scalar abstraction shared by every kernel in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating-point scalar: `f32` or `f64`.
///
/// The associated atomic cell backs the lock-free scatter-add used by the
/// CountSketch kernel.
pub trait Real:
    Float
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    type Atomic: Send + Sync;

    const BYTES: usize;

    fn atomic_zero() -> Self::Atomic;
    fn atomic_add(cell: &Self::Atomic, value: Self);
    fn atomic_load(cell: &Self::Atomic) -> Self;

    /// Lossy conversion from `f64` for constants and tolerances.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("real converts to f64")
    }
}

impl Real for f64 {
    type Atomic = AtomicU64;

    const BYTES: usize = 8;

    #[inline]
    fn atomic_zero() -> AtomicU64 {
        AtomicU64::new(0f64.to_bits())
    }

    #[inline]
    fn atomic_add(cell: &AtomicU64, value: f64) {
        let mut current = cell.load(Ordering::Relaxed);
        loop {
            let next = (f64::from_bits(current) + value).to_bits();
            match cell.compare_exchange_weak(current, next, Ordering::Relaxed, Ordering::Relaxed) {
                Ok(_) => return,
                Err(seen) => current = seen,
            }
        }
    }

    #[inline]
    fn atomic_load(cell: &AtomicU64) -> f64 {
        f64::from_bits(cell.load(Ordering::Relaxed))
    }
}

impl Real for f32 {
    type Atomic = AtomicU32;

    const BYTES: usize = 4;

    #[inline]
    fn atomic_zero() -> AtomicU32 {
        AtomicU32::new(0f32.to_bits())
    }

    #[inline]
    fn atomic_add(cell: &AtomicU32, value: f32) {
        let mut current = cell.load(Ordering::Relaxed);
        loop {
            let next = (f32::from_bits(current) + value).to_bits();
            match cell.compare_exchange_weak(current, next, Ordering::Relaxed, Ordering::Relaxed) {
                Ok(_) => return,
                Err(seen) => current = seen,
            }
        }
    }

    #[inline]
    fn atomic_load(cell: &AtomicU32) -> f32 {
        f32::from_bits(cell.load(Ordering::Relaxed))
    }
}
