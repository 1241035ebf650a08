//! Seed derivation for independent random streams.
//!
//! Every stream is a `ChaCha8Rng` seeded from a SplitMix64 hash of
//! `(base seed, replicate, stream kind, index)`, so the draws for one subject
//! and gene never depend on how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    /// Exposure and covariates, one stream per replicate.
    Subjects = 1,
    /// Mediator set, coefficients and dispersions, one stream per replicate.
    Truth = 2,
    /// Cell counts, one stream per (subject, gene): index = subject · genes + gene.
    Cells = 3,
    /// Outcome noise, one stream per replicate.
    Outcome = 4,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, replicate: u64, stream: Stream, index: u64) -> u64 {
    let mut h = splitmix64(seed);
    h = splitmix64(h ^ replicate);
    h = splitmix64(h ^ stream as u64);
    splitmix64(h ^ index)
}

pub fn stream_rng(seed: u64, replicate: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, replicate, stream, index))
}
