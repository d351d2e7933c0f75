//! Named deterministic random streams.
//!
//! Every stochastic concern of a run — task arrivals, device mobility, agent
//! exploration, network weight initialisation — draws from its own stream,
//! seeded from the run's master seed plus the stream's name. Streams are
//! mutually independent, so a policy that consumes more or fewer exploration
//! draws cannot perturb the workload: two runs with the same master seed see
//! byte-identical task traces regardless of the orchestrator. This is what
//! makes paired-seed comparisons between orchestrators meaningful.

use crate::math;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// FNV-1a hash of the stream name, folded into the seed derivation.
fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// SplitMix64 finaliser; decorrelates master seed and name hash.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// A deterministic random stream identified by `(master_seed, name)`.
pub struct RngStream {
    rng: ChaCha12Rng,
}

impl RngStream {
    /// Derive the stream for `name` under `master_seed`.
    pub fn new(master_seed: u64, name: &str) -> Self {
        let seed = splitmix64(master_seed ^ fnv1a64(name.as_bytes()));
        RngStream {
            rng: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.gen::<f64>()
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.uniform()
    }

    /// Uniform index in `0..n`. `n` must be nonzero.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0, "index() needs a nonempty range");
        self.rng.gen_range(0..n)
    }

    /// Bernoulli trial with success probability `p`.
    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    /// Exponential draw with the given mean, by inversion:
    /// `-mean * ln(1 - u)` with `u` uniform in `[0, 1)`.
    pub fn exponential(&mut self, mean: f64) -> f64 {
        debug_assert!(mean >= 0.0, "exponential mean must be nonnegative");
        -mean * math::ln(1.0 - self.uniform())
    }

    /// Index drawn proportionally to `weights`. Returns `None` when the
    /// weights are empty or sum to zero (the caller decides how to fail).
    pub fn weighted_index(&mut self, weights: &[f64]) -> Option<usize> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return None;
        }
        let mut pick = self.uniform() * total;
        for (idx, &w) in weights.iter().enumerate() {
            pick -= w;
            if pick < 0.0 {
                return Some(idx);
            }
        }
        // Float dust can leave `pick` at exactly 0.0 after the last positive
        // weight; fall back to the last such weight.
        weights.iter().rposition(|&w| w > 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;

    #[test]
    fn same_seed_and_name_reproduce_the_sequence() {
        let mut a = RngStream::new(42, "workload");
        let mut b = RngStream::new(42, "workload");
        for _ in 0..100 {
            assert_eq!(a.uniform().to_bits(), b.uniform().to_bits());
        }
    }

    #[test]
    fn different_names_give_independent_streams() {
        let mut a = RngStream::new(42, "workload");
        let mut b = RngStream::new(42, "mobility");
        let first: Vec<f64> = (0..8).map(|_| a.uniform()).collect();
        let second: Vec<f64> = (0..8).map(|_| b.uniform()).collect();
        assert_ne!(first, second);
    }

    #[test]
    fn exponential_sample_mean_tracks_the_requested_mean() {
        let mut stream = RngStream::new(7, "workload");
        let n = 100_000;
        let sum: f64 = (0..n).map(|_| stream.exponential(2.0)).sum();
        let mean = sum / n as f64;
        assert!(
            (mean - 2.0).abs() / 2.0 < 0.02,
            "sample mean {mean} is more than 2% off 2.0"
        );
    }

    #[test]
    fn index_is_uniform_over_its_range() {
        let mut stream = RngStream::new(11, "agent-exploration");
        let bins = 15usize;
        let draws = 1_000_000usize;
        let mut counts = vec![0usize; bins];
        for _ in 0..draws {
            counts[stream.index(bins)] += 1;
        }
        let expect = 1.0 / bins as f64;
        for (bin, &c) in counts.iter().enumerate() {
            let freq = c as f64 / draws as f64;
            assert!(
                (freq - expect).abs() < 0.01,
                "bin {bin} frequency {freq} strays from {expect}"
            );
        }
    }

    #[test]
    fn bernoulli_rate_matches_probability() {
        let mut stream = RngStream::new(3, "workload");
        let draws = 100_000;
        let hits = (0..draws).filter(|_| stream.bernoulli(0.4)).count();
        let rate = hits as f64 / draws as f64;
        assert!((rate - 0.4).abs() < 0.01, "hit rate {rate} strays from 0.4");
    }

    #[test]
    fn weighted_index_follows_the_weights() {
        let mut stream = RngStream::new(5, "mobility");
        let weights = [1.0, 2.0, 3.0];
        let draws = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..draws {
            counts[stream.weighted_index(&weights).unwrap()] += 1;
        }
        for (idx, &c) in counts.iter().enumerate() {
            let freq = c as f64 / draws as f64;
            let expect = weights[idx] / 6.0;
            assert!(
                (freq - expect).abs() < 0.01,
                "weight {idx} frequency {freq} strays from {expect}"
            );
        }
    }

    #[test]
    fn weighted_index_puts_all_mass_on_the_only_positive_weight() {
        let mut stream = RngStream::new(9, "mobility");
        for _ in 0..1000 {
            assert_eq!(stream.weighted_index(&[1.0, 0.0, 0.0]), Some(0));
        }
    }

    #[test]
    fn degenerate_weights_yield_none() {
        let mut stream = RngStream::new(9, "mobility");
        assert_eq!(stream.weighted_index(&[]), None);
        assert_eq!(stream.weighted_index(&[0.0, 0.0]), None);
    }
}
