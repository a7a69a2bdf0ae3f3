//! Seeded random source shared by every stochastic operation.
//!
//! The generator is ChaCha8 (`rand_chacha`), whose output stream is specified
//! independently of platform and word size. Uniform floats take the top 53
//! bits of a 64-bit word; normal deviates use the Marsaglia polar transform
//! over those uniforms.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};

/// Deterministic random source. Not `Sync`-shared: each run owns one.
#[derive(Debug, Clone)]
pub struct RandomSource {
    seed: u64,
    rng: ChaCha8Rng,
    spare_normal: Option<f64>,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    /// Independent stream for the same seed. Used to give the environment
    /// its own draws so that optimizer choices never shift landscape changes.
    pub fn with_stream(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self {
            seed,
            rng,
            spare_normal: None,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform draw in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> Result<f64> {
        if !(lo < hi) {
            return Err(Error::InvalidRange { lo, hi });
        }
        Ok(self.uniform_in(lo, hi))
    }

    /// Caller guarantees `lo < hi`.
    pub(crate) fn uniform_in(&mut self, lo: f64, hi: f64) -> f64 {
        let v = lo + (hi - lo) * self.unit();
        // rounding can land exactly on hi for wide ranges
        if v >= hi {
            lo.max(hi - (hi - lo) * f64::EPSILON)
        } else {
            v
        }
    }

    /// Uniform index in `0..n`; `n` must be positive.
    pub fn index(&mut self, n: usize) -> usize {
        debug_assert!(n > 0);
        ((self.unit() * n as f64) as usize).min(n - 1)
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare_normal.take() {
            return z;
        }
        loop {
            let u = 2.0 * self.unit() - 1.0;
            let v = 2.0 * self.unit() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                let factor = (-2.0 * s.ln() / s).sqrt();
                self.spare_normal = Some(v * factor);
                return u * factor;
            }
        }
    }
}

pub fn make_random_source(seed: u64) -> RandomSource {
    RandomSource::new(seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn same_seed_same_sequence() {
        let mut a = make_random_source(42);
        let mut b = make_random_source(42);
        for _ in 0..1000 {
            assert_eq!(a.unit().to_bits(), b.unit().to_bits());
            assert_eq!(a.standard_normal().to_bits(), b.standard_normal().to_bits());
        }
    }

    #[test]
    fn different_seeds_differ() {
        let mut a = make_random_source(42);
        let mut b = make_random_source(43);
        let xs: Vec<f64> = (0..100).map(|_| a.unit()).collect();
        let ys: Vec<f64> = (0..100).map(|_| b.unit()).collect();
        assert!(xs.iter().zip(&ys).any(|(x, y)| x != y));
    }

    #[test]
    fn streams_are_independent() {
        let mut a = RandomSource::with_stream(7, 0);
        let mut b = RandomSource::with_stream(7, 1);
        let xs: Vec<f64> = (0..100).map(|_| a.unit()).collect();
        let ys: Vec<f64> = (0..100).map(|_| b.unit()).collect();
        assert_ne!(xs, ys);
    }

    #[test]
    fn first_draw_in_open_unit_interval() {
        for seed in 0..1000 {
            let x = make_random_source(seed).unit();
            assert!(x > 0.0 && x < 1.0, "seed {seed} gave {x}");
        }
    }

    #[test]
    fn uniform_rejects_empty_range() {
        let mut src = make_random_source(1);
        assert!(matches!(src.uniform(1.0, 1.0), Err(Error::InvalidRange { .. })));
        assert!(src.uniform(2.0, 1.0).is_err());
    }

    #[test]
    fn inertia_range_draws() {
        let mut src = make_random_source(3);
        for _ in 0..10_000 {
            let w = src.uniform(0.4, 0.9).unwrap();
            assert!((0.4..0.9).contains(&w));
        }
    }

    #[test]
    fn uniform_mean_monte_carlo() {
        let mut src = make_random_source(11);
        let n = 100_000;
        let mean = (0..n).map(|_| src.uniform(0.0, 1.0).unwrap()).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn normal_moments_monte_carlo() {
        let mut src = make_random_source(12);
        let n = 100_000;
        let xs: Vec<f64> = (0..n).map(|_| src.standard_normal()).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.05, "variance {var}");
    }

    proptest! {
        #[test]
        fn uniform_stays_in_half_open_range(seed: u64, lo in -1e6f64..1e6, span in 1e-9f64..1e6) {
            let hi = lo + span;
            prop_assume!(lo < hi);
            let mut src = make_random_source(seed);
            for _ in 0..64 {
                let v = src.uniform(lo, hi).unwrap();
                prop_assert!(v >= lo && v < hi);
            }
        }
    }
}
