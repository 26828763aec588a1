//! Seeded randomness for reproducible simulation campaigns.
//!
//! Each trial runs on its own ChaCha stream keyed by a child seed derived
//! from the campaign seed and the trial index, so trials are independent
//! and any one of them can be replayed in isolation.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Child seed for trial `trial` of a campaign seeded with `seed`.
///
/// `mix` is a bijection on u64 and `(trial + 1) * GAMMA` is injective in
/// `trial` (GAMMA is odd), so for a fixed campaign seed no two trials share
/// a child seed.
pub fn child_seed(seed: u64, trial: u64) -> u64 {
    mix(seed.wrapping_add(trial.wrapping_add(1).wrapping_mul(GAMMA)))
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic generator owned by a single trial.
#[derive(Debug, Clone)]
pub struct TrialRng(ChaCha8Rng);

impl TrialRng {
    pub fn new(seed: u64) -> Self {
        TrialRng(ChaCha8Rng::seed_from_u64(seed))
    }

    /// Uniform integer seconds in `[lo, hi)`.
    pub fn uniform_secs(&mut self, lo: i64, hi: i64) -> i64 {
        self.0.gen_range(lo..hi)
    }

    /// Standard Box-Muller normal draw.
    fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        let u1: f64 = 1.0 - self.0.gen::<f64>(); // (0, 1]
        let u2: f64 = self.0.gen();
        mean + sd * (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Normal draw rounded to whole seconds, resampled until it lands in
    /// `[lo, hi]`. With `sd == 0` this is just the rounded mean.
    pub fn trunc_normal_secs(&mut self, mean: f64, sd: f64, lo: i64, hi: i64) -> i64 {
        if sd == 0.0 {
            return (mean.round() as i64).clamp(lo, hi);
        }
        loop {
            let v = self.normal(mean, sd).round() as i64;
            if (lo..=hi).contains(&v) {
                return v;
            }
        }
    }
}
