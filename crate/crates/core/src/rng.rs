//! Counter-based random streams.
//!
//! Every random draw is a pure function of `(seed, index)`: the seed keys a
//! ChaCha8 generator and the sample index selects its stream, so Monte Carlo
//! loops give identical results whatever order samples are evaluated in.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

/// Random stream for sample `index` under `seed`.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform double in `[0, 1)` with 53 random bits.
pub fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Uniform double in `[-r, r)`.
pub fn symmetric_f64(rng: &mut impl RngCore, r: f64) -> f64 {
    (2.0 * unit_f64(rng) - 1.0) * r
}

/// Uniform integer in `[-h, h]`.
pub fn int_in(rng: &mut impl RngCore, h: i64) -> i64 {
    let span = (2 * h + 1) as u64;
    (rng.next_u64() % span) as i64 - h
}

/// Derives an independent seed for a named sub-computation.
pub fn derive(seed: u64, tag: u64) -> u64 {
    let mut rng = stream(seed, u64::MAX - tag);
    rng.next_u64()
}
