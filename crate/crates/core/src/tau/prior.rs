//! Kingman coalescent prior on holding times.

use crate::real::{choose2, Real};

/// Merger rate `C(n + 1 - i, 2)` of the 1-based holding time `i`.
#[inline]
pub fn merger_rate<R: Real>(n: usize, i: usize) -> R {
    choose2(n + 1 - i)
}

/// Log prior density `-Σ C(n + 1 - i, 2) t_i`; identical for every ranked
/// topology.
pub fn log_prior<R: Real>(n: usize, times: &[R]) -> R {
    times
        .iter()
        .enumerate()
        .map(|(j, &t)| -merger_rate::<R>(n, j + 1) * t)
        .sum()
}

pub fn prior_gradient<R: Real>(n: usize, times: &[R]) -> Vec<R> {
    (1..=times.len()).map(|i| -merger_rate::<R>(n, i)).collect()
}

/// Prior mean of the 1-based holding time `i`.
pub fn prior_mean(n: usize, i: usize) -> f64 {
    1.0 / merger_rate::<f64>(n, i)
}

/// Prior mean tree height `2 (1 - 1/n)`.
pub fn prior_mean_height(n: usize) -> f64 {
    (1..n).map(|i| prior_mean(n, i)).sum()
}
