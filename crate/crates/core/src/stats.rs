//! Streaming moment accumulation and deterministic batched reduction.

use rayon::prelude::*;

/// Welford running mean and variance.
///
/// The update is exact for constant input streams (the increment is exactly
/// zero once the mean equals the data), which is what lets constant
/// integrands come out bit-exact downstream.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, value: f64) {
        self.count += 1;
        let delta = value - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (value - self.mean);
    }

    /// Chan's pairwise combination. Preserves the constant-stream exactness
    /// of `push`: merging two accumulators with equal means keeps the mean
    /// bit-identical.
    pub fn merge(self, other: Self) -> Self {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let count = self.count + other.count;
        let delta = other.mean - self.mean;
        let mean = self.mean + delta * (other.count as f64 / count as f64);
        let m2 = self.m2
            + other.m2
            + delta * delta * (self.count as f64 * other.count as f64 / count as f64);
        Self { count, mean, m2 }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero when fewer than two observations.
    pub fn sample_variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Standard error of the mean: sample standard deviation / sqrt(count).
    pub fn std_error(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.sample_variance() / self.count as f64).sqrt()
        }
    }
}

/// Fixed batch size for parallel Monte Carlo loops. Work is always split
/// into the same batches regardless of thread count, and partial results
/// are merged in batch order, so results are independent of parallelism.
pub const BATCH_SIZE: u64 = 4096;

/// Runs `per_batch` over the fixed batch partition of `0..total` (possibly
/// in parallel) and folds the partial results in batch order.
pub fn batched_fold<T, F, M>(total: u64, per_batch: F, init: T, merge: M) -> T
where
    T: Send,
    F: Fn(u64, std::ops::Range<u64>) -> T + Sync,
    M: Fn(T, T) -> T,
{
    let n_batches = total.div_ceil(BATCH_SIZE);
    let partials: Vec<T> = (0..n_batches)
        .into_par_iter()
        .map(|b| {
            let lo = b * BATCH_SIZE;
            let hi = (lo + BATCH_SIZE).min(total);
            per_batch(b, lo..hi)
        })
        .collect();
    partials.into_iter().fold(init, merge)
}

/// `batched_fold` specialised to a single `RunningStats` accumulator.
pub fn batched_stats<F>(total: u64, per_batch: F) -> RunningStats
where
    F: Fn(u64, std::ops::Range<u64>) -> RunningStats + Sync,
{
    batched_fold(total, per_batch, RunningStats::new(), RunningStats::merge)
}
