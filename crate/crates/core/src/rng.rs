//! Seeded sampling helpers.
//!
//! All randomness in the crate flows through `ChaCha20Rng` seeded from a
//! caller-provided `u64`, so results are reproducible across runs and
//! platforms. Substreams are derived with `mix` so that independent draws
//! (inputs vs. targets vs. labels) do not share a stream.

use core::f64::consts::PI;
// Float math resolves through std's inherent methods whenever std is in the
// crate graph (tests); the trait supplies it in pure no_std builds.
#[allow(unused_imports)]
use num_traits::Float;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub fn chacha(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// splitmix64 step; used to derive independent substream seeds.
pub fn mix(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Standard normal draw via Box–Muller (one variate per call).
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    // u1 in (0, 1] so the log is finite.
    let u1 = 1.0 - rng.gen::<f64>();
    let u2 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Standard Cauchy draw via the inverse CDF.
pub fn standard_cauchy<R: Rng>(rng: &mut R) -> f64 {
    let u = rng.gen::<f64>();
    (PI * (u - 0.5)).tan()
}

/// Uniform draw on [0, 2π).
pub fn uniform_phase<R: Rng>(rng: &mut R) -> f64 {
    2.0 * PI * rng.gen::<f64>()
}
