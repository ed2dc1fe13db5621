//! Seeded random streams.
//!
//! Every run derives its generators from one root seed: ChaCha8 seeded with
//! `seed_from_u64(seed)`, then split by stream number. Draws go through
//! 64-bit integer ranges so results do not depend on the platform's
//! pointer width.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Which instance to present at each trial.
pub const SAMPLING_STREAM: u64 = 0;
/// Which instances receive interval labels, and which interval.
pub const INTERVAL_STREAM: u64 = 1;
/// Epoch shuffles for offline reference fits.
pub const SHUFFLE_STREAM: u64 = 2;
/// Synthetic data generation.
pub const GENERATOR_STREAM: u64 = 3;

pub type StreamRng = ChaCha8Rng;

pub fn stream(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform index in `0..n`. Panics when `n == 0`.
pub fn index(rng: &mut impl Rng, n: usize) -> usize {
    rng.gen_range(0..n as u64) as usize
}

/// In-place Fisher-Yates shuffle using [`index`].
pub fn shuffle<T>(rng: &mut impl Rng, items: &mut [T]) {
    for i in (1..items.len()).rev() {
        items.swap(i, index(rng, i + 1));
    }
}

/// `count` distinct indices from `0..n`, in draw order.
pub fn sample_without_replacement(rng: &mut impl Rng, n: usize, count: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    let count = count.min(n);
    for i in 0..count {
        let j = i + index(rng, n - i);
        pool.swap(i, j);
    }
    pool.truncate(count);
    pool
}
