//! Seeded generation of generic rational points.

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::jet::Rational;

/// Upper bound for sampled numerators and denominators.
pub const SAMPLE_BOUND: i64 = 97;

/// Deterministic source of nonzero rationals.
#[derive(Clone, Debug)]
pub struct Sampler {
    rng: ChaCha8Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Sampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// `p / q` with `p, q` uniform in `[1, 97]`.
    pub fn nonzero(&mut self) -> Rational {
        let p = self.rng.gen_range(1..=SAMPLE_BOUND);
        let q = self.rng.gen_range(1..=SAMPLE_BOUND);
        Rational::new(BigInt::from(p), BigInt::from(q))
    }

    /// Nonzero rational with a random sign.
    pub fn signed_nonzero(&mut self) -> Rational {
        let v = self.nonzero();
        if self.rng.gen_bool(0.5) {
            -v
        } else {
            v
        }
    }

    /// Small integer in `[lo, hi]`, as a rational.
    pub fn small_int(&mut self, lo: i64, hi: i64) -> Rational {
        Rational::from_integer(BigInt::from(self.rng.gen_range(lo..=hi)))
    }

    pub fn range(&mut self, lo: u32, hi: u32) -> u32 {
        self.rng.gen_range(lo..=hi)
    }

    pub fn coin(&mut self) -> bool {
        self.rng.gen_bool(0.5)
    }

    pub fn nonzero_vec(&mut self, n: usize) -> Vec<Rational> {
        (0..n).map(|_| self.nonzero()).collect()
    }
}
