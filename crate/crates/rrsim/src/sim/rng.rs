//! Named deterministic random streams.
//!
//! Every consumer (placement, workload, mobility, failures, jitter, ...)
//! owns a stream derived from `(seed, label)`. Draw order inside one stream
//! never depends on another stream, so adding draws to one subsystem leaves
//! all other subsystems' sequences untouched.

use crate::world::hash::{hash_label, mix64, unit_from_bits};

/// A counter-based generator: output `i` is `mix64(state0 + i * GAMMA)`.
#[derive(Clone, Debug)]
pub struct RngStream {
    state: u64,
}

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

impl RngStream {
    /// Derive the stream for `label` under `seed`.
    pub fn new(seed: u64, label: &str) -> Self {
        RngStream {
            state: hash_label(seed, label),
        }
    }

    /// Derive a sub-stream, e.g. a per-node stream from a subsystem stream.
    pub fn substream(seed: u64, label: &str, index: u64) -> Self {
        RngStream {
            state: mix64(hash_label(seed, label) ^ mix64(index)),
        }
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        let out = mix64(self.state);
        self.state = self.state.wrapping_add(GAMMA);
        out
    }

    /// Uniform double in [0, 1).
    #[inline]
    pub fn uniform01(&mut self) -> f64 {
        unit_from_bits(self.next_u64())
    }

    /// Uniform double in [lo, hi).
    #[inline]
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform01()
    }

    /// Uniform integer in [0, n) by multiply-shift; bias is at most 2^-64
    /// per draw, far below anything observable here.
    #[inline]
    pub fn uniform_int(&mut self, n: u64) -> u64 {
        assert!(n > 0, "uniform_int needs a nonempty range");
        ((self.next_u64() as u128 * n as u128) >> 64) as u64
    }

    /// Exponential with the given rate (mean 1/rate).
    #[inline]
    pub fn exp(&mut self, rate: f64) -> f64 {
        assert!(rate > 0.0);
        // 1 - u is in (0, 1], so the log is finite.
        -(1.0 - self.uniform01()).ln() / rate
    }

    /// Bernoulli trial.
    #[inline]
    pub fn chance(&mut self, p: f64) -> bool {
        self.uniform01() < p
    }
}
