//! Replicated Monte Carlo with reproducible sub-seeding.
//!
//! Replicate `i` draws from a ChaCha8 stream selected by `(seed, i)`, so a
//! replicate's value does not depend on which worker runs it. Results are
//! collected in replicate order and reduced sequentially, which makes every
//! estimate bit-identical across worker counts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};

/// Replicate count, base seed and optional worker count.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MonteCarlo {
    pub replicates: usize,
    pub seed: u64,
    pub workers: Option<usize>,
}

impl MonteCarlo {
    pub fn new(replicates: usize, seed: u64) -> Self {
        Self {
            replicates,
            seed,
            workers: None,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers.max(1));
        self
    }

    /// The generator for replicate `index`.
    pub fn replicate_rng(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        rng
    }

    /// Runs `f` once per replicate and returns the results in replicate order.
    pub fn run<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize, &mut ChaCha8Rng) -> Result<T> + Sync,
    {
        let job = || {
            (0..self.replicates)
                .into_par_iter()
                .map(|i| f(i, &mut self.replicate_rng(i)))
                .collect::<Result<Vec<T>>>()
        };
        match self.workers {
            Some(n) => rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::WorkerPool(e.to_string()))?
                .install(job),
            None => job(),
        }
    }
}

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub replicates: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std_error: f64::NAN,
                replicates: 0,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
            (ss / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        Self {
            mean,
            std_error,
            replicates: n,
        }
    }
}

/// Sample mean, unbiased variance and the standard error of that variance.
#[derive(Clone, Copy, Debug)]
pub struct VarianceEstimate {
    pub mean: f64,
    pub variance: f64,
    pub variance_std_error: f64,
}

impl VarianceEstimate {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
        let variance = m2 * n / (n - 1.0);
        Self {
            mean,
            variance,
            variance_std_error: ((m4 - m2 * m2).max(0.0) / n).sqrt(),
        }
    }
}

/// Linear-interpolation quantile (type 7) of an unsorted sample.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `(estimate − reference) / std_error`, with the zero-variance case mapped
/// to `0` on exact agreement and `±∞` otherwise.
pub fn z_score(estimate: f64, reference: f64, std_error: f64) -> f64 {
    let diff = estimate - reference;
    if std_error > 0.0 {
        diff / std_error
    } else if diff.abs() <= 1e-12 * reference.abs().max(1.0) {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn estimate_of_constant_has_zero_error() {
        let e = Estimate::from_samples(&[2.0; 10]);
        assert_eq!(e.mean, 2.0);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn estimate_matches_hand_computation() {
        let e = Estimate::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(e.mean, 2.5);
        // s² = 5/3, se = sqrt(5/12)
        assert!((e.std_error - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn quantiles_interpolate() {
        let xs = [3.0, 1.0, 2.0, 4.0, 5.0];
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 0.5), 3.0);
        assert_eq!(quantile(&xs, 1.0), 5.0);
        assert!((quantile(&xs, 0.95) - 4.8).abs() < 1e-12);
    }

    #[test]
    fn z_score_edge_cases() {
        assert_eq!(z_score(1.0, 1.0, 0.0), 0.0);
        assert_eq!(z_score(2.0, 1.0, 0.0), f64::INFINITY);
        assert_eq!(z_score(3.0, 1.0, 0.5), 4.0);
    }

    #[test]
    fn runs_are_identical_across_worker_counts() {
        let draw = |_: usize, rng: &mut ChaCha8Rng| Ok(rng.random::<f64>());
        let a = MonteCarlo::new(500, 9).with_workers(1).run(draw).unwrap();
        let b = MonteCarlo::new(500, 9).with_workers(4).run(draw).unwrap();
        assert_eq!(a, b);
        let c = MonteCarlo::new(500, 10).run(draw).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn replicate_streams_differ() {
        let mc = MonteCarlo::new(2, 1);
        let a: u64 = mc.replicate_rng(0).random();
        let b: u64 = mc.replicate_rng(1).random();
        assert_ne!(a, b);
    }
}
