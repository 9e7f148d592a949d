//! Binomial estimates, Wilson intervals, and the seeded per-trial RNG layout.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959963984540054;

/// Independent RNG families drawn by a single trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Family {
    Exponential = 0,
    OddUniform = 1,
    DiamondUniform = 2,
    Aux = 3,
}

/// RNG for one trial and one variate family. Streams never overlap, so the
/// result is a function of `(seed, trial, family)` alone.
pub fn trial_rng(seed: u64, trial: u64, family: Family) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial.wrapping_mul(4).wrapping_add(family as u64));
    rng
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n_f = n as f64;
    let phat = k as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let centre = (phat + z2 / (2.0 * n_f)) / denom;
    let half = z * (phat * (1.0 - phat) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// `|phat - p| <= k * sqrt(p (1 - p) / n)`; at `p` in {0, 1} this demands equality.
pub fn within_sigmas(phat: f64, p: f64, n: u64, k: f64) -> bool {
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    (phat - p).abs() <= k * sigma + 1e-15
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub successes: u64,
    pub trials: u64,
    /// Samples on which the buffer was too thin to certify locality.
    pub dense_failures: u64,
}

impl Estimate {
    pub fn from_counts(successes: u64, trials: u64, dense_failures: u64) -> Estimate {
        let (lo, hi) = wilson(successes, trials, Z95);
        let value = if trials == 0 {
            0.0
        } else {
            successes as f64 / trials as f64
        };
        Estimate {
            value,
            ci_lo: lo.min(value),
            ci_hi: hi.max(value),
            successes,
            trials,
            dense_failures,
        }
    }

    /// Plug-in standard error of the proportion.
    pub fn sigma(&self) -> f64 {
        (self.value * (1.0 - self.value) / self.trials.max(1) as f64).sqrt()
    }

    pub fn straddles(&self, target: f64) -> bool {
        self.ci_lo <= target && target <= self.ci_hi
    }
}

/// Mean and standard error of a sample summarised by its first two moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub std_err: f64,
    pub samples: u64,
}

impl MeanEstimate {
    pub fn from_sums(sum: f64, sum_sq: f64, samples: u64) -> MeanEstimate {
        let n = samples.max(1) as f64;
        let mean = sum / n;
        let var = if samples > 1 {
            ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        MeanEstimate {
            mean,
            std_err: (var / n).sqrt(),
            samples,
        }
    }

    /// Exact integer moments; keeps aggregation order-independent.
    pub fn from_int_sums(sum: i64, sum_sq: i64, samples: u64) -> MeanEstimate {
        MeanEstimate::from_sums(sum as f64, sum_sq as f64, samples)
    }
}

/// Run `f` for every trial index and add the integer tallies. Integer sums
/// make the result independent of how rayon splits the work.
pub fn tally<const K: usize, F>(trials: u64, f: F) -> [i64; K]
where
    F: Fn(u64) -> [i64; K] + Sync + Send,
{
    (0..trials)
        .into_par_iter()
        .map(f)
        .reduce(
            || [0i64; K],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn wilson_contains_phat() {
        for &(k, n) in &[(0u64, 10u64), (10, 10), (3, 10), (5000, 10000)] {
            let (lo, hi) = wilson(k, n, Z95);
            let p = k as f64 / n as f64;
            assert!(lo <= p + 1e-12 && p <= hi + 1e-12);
        }
        let (lo, hi) = wilson(0, 10, Z95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.2 && hi < 0.35);
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: f64 = trial_rng(7, 3, Family::Exponential).random();
        let b: f64 = trial_rng(7, 3, Family::Exponential).random();
        let c: f64 = trial_rng(7, 3, Family::OddUniform).random();
        let d: f64 = trial_rng(7, 4, Family::Exponential).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn tally_is_order_free() {
        let r = tally::<2, _>(1000, |i| [1, (i % 7) as i64]);
        assert_eq!(r[0], 1000);
        assert_eq!(r[1], (0..1000).map(|i| i % 7).sum::<i64>());
    }

    #[test]
    fn mean_estimate_basics() {
        let m = MeanEstimate::from_sums(10.0, 10.0, 10);
        assert_eq!(m.mean, 1.0);
        assert_eq!(m.std_err, 0.0);
    }
}
