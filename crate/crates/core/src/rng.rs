//! Seeded random stream shared by one run.
//!
//! Every `rand` in the update formulas is one draw from this stream, consumed in
//! the order the formulas are written.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

pub type RunRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> RunRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform draw in `[0, 1)` with 53 bits of precision.
#[inline]
pub fn unit<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform draw in `[lo, hi)`.
#[inline]
pub fn uniform<R: RngCore + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * unit(rng)
}

/// `sign(u - 0.5)` with `sign(0) = 0`.
#[inline]
pub fn signed_coin(u: f64) -> f64 {
    let d = u - 0.5;
    if d > 0.0 {
        1.0
    } else if d < 0.0 {
        -1.0
    } else {
        0.0
    }
}
