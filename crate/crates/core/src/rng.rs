//! Seeded counter-based random streams.
//!
//! Every public sampling entry point takes an explicit 64-bit seed. Work is
//! split into independent ChaCha streams keyed by (seed, stream index), so
//! chunked parallel generation reproduces the sequential output exactly.

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

/// Number of rows per generation chunk. Fixed so that results do not depend
/// on the worker count.
pub const CHUNK_ROWS: usize = 4096;

/// An independent stream derived from a user seed.
pub fn stream(seed: u64, index: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform draw on [0, 1) with 53 bits of precision.
pub fn next_f64(rng: &mut ChaCha12Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Unbiased draw from 0..bound via rejection on the widening multiply.
pub fn next_below(rng: &mut ChaCha12Rng, bound: usize) -> usize {
    debug_assert!(bound > 0);
    let bound = bound as u64;
    loop {
        let x = rng.next_u64();
        let m = (x as u128) * (bound as u128);
        let low = m as u64;
        if low >= bound {
            return (m >> 64) as usize;
        }
        // Rejection zone for the low word; threshold is 2^64 mod bound.
        let threshold = bound.wrapping_neg() % bound;
        if low >= threshold {
            return (m >> 64) as usize;
        }
    }
}

/// In-place Fisher-Yates shuffle.
pub fn shuffle<T>(rng: &mut ChaCha12Rng, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        let j = next_below(rng, i + 1);
        items.swap(i, j);
    }
}
