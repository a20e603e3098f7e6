//! Trial execution: data-parallel by default, sequential behind a feature flag.
//!
//! Results come back indexed by trial, so aggregation order (and therefore
//! every reported mean) is independent of thread scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Run `trials` independent trials and collect results in trial order.
///
/// Uses rayon when the `parallel` feature is enabled (the default),
/// otherwise falls back to a plain sequential loop.
pub fn map_trials<T, F>(trials: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..trials).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..trials).map(f).collect()
    }
}

/// Sequential reference path; the benches compare this against [`map_trials`].
pub fn map_trials_sequential<T, F>(trials: u64, f: F) -> Vec<T>
where
    F: Fn(u64) -> T,
{
    (0..trials).map(f).collect()
}

/// Sample mean and standard error (sample std / sqrt(n); 0 for n < 2).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}
