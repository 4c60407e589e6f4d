//! Counter-based SplitMix64 streams.
//!
//! A stream is a 64-bit key plus a draw counter. Draw `n` (1-based) is
//!
//! ```text
//! z = key + n * 0x9e3779b97f4a7c15            (wrapping)
//! z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9
//! z = (z ^ (z >> 27)) * 0x94d049bb133111eb
//! out = z ^ (z >> 31)
//! ```
//!
//! which is exactly the classic SplitMix64 sequence seeded with `key`.
//! Seed 0 yields `0xe220a8397b1dcdaf, 0x6e789e6aa1b965f4, 0x06c45d188009454f`.
//!
//! Independent streams are derived with `key = mix(seed + mix(id + 0x632be59bd9b4e019))`
//! where `mix` is the finalizer above applied to its argument. Uniform doubles
//! use the top 53 bits: `(out >> 11) * 2^-53`.

use serde::{Deserialize, Serialize};

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;
const STREAM_SALT: u64 = 0x632b_e59b_d9b4_e019;

#[inline]
pub fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Well-known stream ids.
pub mod stream {
    pub const MIGRATION: u64 = u64::MAX;
    pub const SETUP: u64 = u64::MAX - 1;

    pub const fn field(index: usize) -> u64 {
        index as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rng {
    key: u64,
    counter: u64,
}

impl Rng {
    pub fn from_key(key: u64) -> Self {
        Rng { key, counter: 0 }
    }

    pub fn stream(seed: u64, id: u64) -> Self {
        Rng::from_key(mix(seed.wrapping_add(mix(id.wrapping_add(STREAM_SALT)))))
    }

    pub fn from_parts(key: u64, counter: u64) -> Self {
        Rng { key, counter }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform in `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in `0..n` (multiply-high reduction). `n` must be > 0.
    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Uniform direction on the unit sphere.
    pub fn unit_vector(&mut self) -> [f64; 3] {
        let z = 2.0 * self.uniform() - 1.0;
        let phi = 2.0 * std::f64::consts::PI * self.uniform();
        let s = (1.0 - z * z).max(0.0).sqrt();
        [s * phi.cos(), s * phi.sin(), z]
    }

    /// Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}
