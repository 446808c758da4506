//! Seeded random streams.
//!
//! A run is driven by one 64-bit master seed. Samples are produced in fixed
//! blocks of [`BLOCK_SIZE`] draws and block `k` always uses the stream
//! `derive_seed(master, k)`, so the output is identical for every thread
//! count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// The generator used for every stream.
pub type Stream = ChaCha8Rng;

pub const BLOCK_SIZE: usize = 1 << 14;

/// One step of the SplitMix64 generator.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of logical stream `index` under `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    splitmix64(master ^ splitmix64(index))
}

pub fn stream(master: u64, index: u64) -> Stream {
    Stream::seed_from_u64(derive_seed(master, index))
}

/// Produces `count` items in parallel blocks.
///
/// `fill(rng, len)` returns the items for `len` draws taken from `rng`
/// (possibly several items per draw). Blocks are concatenated in index order.
pub fn par_blocks<T, F>(count: usize, master: u64, fill: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut Stream, usize) -> Vec<T> + Sync,
{
    let n_blocks = count.div_ceil(BLOCK_SIZE);
    let parts: Vec<Vec<T>> = (0..n_blocks)
        .into_par_iter()
        .map(|k| {
            let len = BLOCK_SIZE.min(count - k * BLOCK_SIZE);
            let mut rng = stream(master, k as u64);
            fill(&mut rng, len)
        })
        .collect();
    let mut out = Vec::with_capacity(count);
    for p in parts {
        out.extend(p);
    }
    out
}
