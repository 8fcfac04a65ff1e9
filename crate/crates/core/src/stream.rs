//! Splittable seeded streams and a deterministic parallel sampler.
//!
//! A [`Streams`] value is a 64-bit key. [`Streams::derive`] mixes a tag into
//! the key to obtain an independent family (one per experiment cell), and
//! [`Streams::rng`] opens numbered ChaCha sub-streams within a family.
//!
//! [`par_collect`] splits `n` draws into fixed blocks of [`BLOCK_LEN`]; block
//! `b` always reads sub-stream `b`, so results do not depend on how many
//! worker threads execute the blocks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub type StreamRng = ChaCha8Rng;

/// Draws per sub-stream in [`par_collect`].
pub const BLOCK_LEN: usize = 2048;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Streams {
    key: u64,
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        Self { key: splitmix64(seed) }
    }

    /// Independent family for a numeric tag (e.g. the `n` of a cell).
    pub fn derive(&self, tag: u64) -> Self {
        Self {
            key: splitmix64(self.key ^ splitmix64(tag ^ 0x6A09_E667_F3BC_C908)),
        }
    }

    /// Independent family for a string tag (e.g. a metric id).
    pub fn derive_str(&self, tag: &str) -> Self {
        // FNV-1a
        let hash = tag.bytes().fold(0xCBF2_9CE4_8422_2325u64, |h, b| {
            (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01B3)
        });
        self.derive(hash)
    }

    pub fn rng(&self, index: u64) -> StreamRng {
        let mut seed = [0u8; 32];
        let mut x = self.key;
        for chunk in seed.chunks_exact_mut(8) {
            x = splitmix64(x);
            chunk.copy_from_slice(&x.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(index);
        rng
    }
}

/// Runs `draw` `n` times across the rayon pool and returns the results in
/// sample order. Output is identical for every worker count.
pub fn par_collect<T, F>(streams: &Streams, n: usize, draw: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut StreamRng) -> T + Sync,
{
    let blocks = n.div_ceil(BLOCK_LEN);
    let chunks: Vec<Vec<T>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = streams.rng(b as u64);
            let len = BLOCK_LEN.min(n - b * BLOCK_LEN);
            (0..len).map(|_| draw(&mut rng)).collect()
        })
        .collect();
    chunks.into_iter().flatten().collect()
}

/// Runs `op` inside a dedicated pool of `workers` threads.
pub fn with_workers<R, F>(workers: usize, op: F) -> Result<R>
where
    R: Send,
    F: FnOnce() -> R + Send,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Parameter(format!("cannot build pool of {workers} workers: {e}")))?;
    Ok(pool.install(op))
}
