//! Seed derivation and block-parallel sampling.
//!
//! Draws are produced in fixed-size blocks, each with its own ChaCha stream
//! seeded from `(seed, block index)`. Blocks are joined in index order, so the
//! output does not depend on how many worker threads ran them.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{fas_amplitude, CorrelationSpec};

/// Draws per independent random stream.
pub const BLOCK_SIZE: usize = 4096;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a task ordinal into an independent 64-bit seed.
pub fn derive_seed(base: u64, ordinal: u64) -> u64 {
    splitmix64(splitmix64(base) ^ splitmix64(ordinal.wrapping_add(0x632B_E59B_D9B4_E019)))
}

pub fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, block))
}

/// `n` independent draws of `|g_FAS|` under `spec`.
pub fn sample_fas_amplitudes(spec: &CorrelationSpec, n: usize, seed: u64) -> Vec<f64> {
    let blocks = n.div_ceil(BLOCK_SIZE);
    let parts: Vec<Vec<f64>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let len = BLOCK_SIZE.min(n - b * BLOCK_SIZE);
            let mut rng = block_rng(seed, b as u64);
            let mut gains = Vec::with_capacity(spec.grid().ports());
            (0..len)
                .map(|_| {
                    spec.sample_into(&mut rng, &mut gains);
                    fas_amplitude(&gains)
                })
                .collect()
        })
        .collect();
    parts.concat()
}

/// Running mean and variance (Welford), mergeable (Chan et al.).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Moments of `f` over `values`, accumulated per block and merged in block order.
pub fn block_moments<F>(values: &[f64], f: F) -> Moments
where
    F: Fn(f64) -> f64 + Sync,
{
    let parts: Vec<Moments> = values
        .par_chunks(BLOCK_SIZE)
        .map(|chunk| {
            let mut m = Moments::default();
            for &v in chunk {
                m.push(f(v));
            }
            m
        })
        .collect();
    parts.iter().fold(Moments::default(), |mut acc, m| {
        acc.merge(m);
        acc
    })
}
