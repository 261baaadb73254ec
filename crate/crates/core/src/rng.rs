//! Replica random streams.
//!
//! Replica `i` of a run with master seed `s` draws from the ChaCha8 stream
//! `i` keyed by `s`, so results do not depend on how replicas are scheduled.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

#[derive(Debug, Clone)]
pub struct ReplicaRng {
    inner: ChaCha8Rng,
}

impl ReplicaRng {
    pub fn new(master_seed: u64, replica: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream(replica);
        Self { inner }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in (0, 1], never zero.
    #[inline]
    pub fn uniform_pos(&mut self) -> f64 {
        ((self.inner.next_u64() >> 11) as f64 + 1.0) * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Exponential with the given rate, by inversion.
    #[inline]
    pub fn exp(&mut self, rate: f64) -> f64 {
        -libm::log(self.uniform_pos()) / rate
    }

    /// Bernoulli(p).
    #[inline]
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform_pos() <= p
    }

    /// Uniform integer in 0..n (n > 0), Lemire's multiply-shift.
    #[inline]
    pub fn below(&mut self, n: usize) -> usize {
        ((self.inner.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Geometric on {0,1,2,...} with P(k) = (1-p) p^k, via floor of an exponential.
    #[inline]
    pub fn geometric(&mut self, p: f64) -> u64 {
        if p <= 0.0 {
            return 0;
        }
        libm::floor(libm::log(self.uniform_pos()) / libm::log(p)) as u64
    }
}
