//! Reproducible random streams.
//!
//! A stream is ChaCha8 keyed by `(seed, stream_id)`; uniforms take the top 53 bits of each `u64`
//! and normals go through the inverse normal CDF, so the sequence is the same on every platform.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::numerics::std_normal_quantile;

const TWO_POW_M53: f64 = 1.0 / (1u64 << 53) as f64;

/// Stream purposes; part of the derived stream id so that independent draws never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Channel = 1,
    Residual = 2,
    Symbols = 3,
    Noise = 4,
    Estimator = 5,
    Verify = 6,
}

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        Self { seed, stream_id, inner }
    }

    /// Stream for one `(point, trial, purpose)` cell of a sweep. Distinct cells get distinct ids
    /// for `point < 2^24` and `trial < 2^32`.
    pub fn for_cell(seed: u64, point: u64, trial: u64, purpose: Purpose) -> Self {
        debug_assert!(point < 1 << 24 && trial < 1 << 32);
        Self::new(seed, (point << 40) | (trial << 8) | purpose as u64)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.inner.next_u64() >> 11) as f64 * TWO_POW_M53
    }

    /// Uniform on `(0, 1)`: bucket midpoints, never 0 or 1.
    #[inline]
    pub fn open_uniform(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) as f64 + 0.5) * TWO_POW_M53
    }

    /// Uniform on `[lo, hi)`.
    #[inline]
    pub fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        std_normal_quantile(self.open_uniform())
    }

    #[inline]
    pub fn normal(&mut self, mean: f64, std: f64) -> f64 {
        mean + std * self.standard_normal()
    }
}
