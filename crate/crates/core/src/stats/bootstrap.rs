use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::check_confidence;
use crate::error::{Error, Result};
use crate::rng::{domain, StreamKey};
use crate::sampling::resample_counts;

pub const MIN_RESAMPLES: usize = 100;

/// Percentile-bootstrap lower bound for one statistic.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapBound {
    pub lower: f64,
    /// Statistic on the original sample.
    pub estimate: f64,
    /// False when the estimate is below `1/√n`, where the bootstrap's
    /// `O(1/√n)` error swamps the quantity being bounded.
    pub reliable: bool,
}

pub fn reliability_threshold(sample_size: u64) -> f64 {
    1.0 / (sample_size as f64).sqrt()
}

/// The `(1 − confidence)` empirical quantile of `sorted` (ascending).
///
/// Higher confidence never selects a larger element.
pub fn lower_percentile(sorted: &[f64], confidence: f64) -> f64 {
    let index = ((1.0 - confidence) * sorted.len() as f64).floor() as usize;
    sorted[index.min(sorted.len() - 1)]
}

fn check_resamples(resamples: usize) -> Result<()> {
    if resamples < MIN_RESAMPLES {
        return Err(Error::InvalidParameter(format!(
            "need at least {MIN_RESAMPLES} bootstrap resamples, got {resamples}"
        )));
    }
    Ok(())
}

/// Per-component lower percentiles of `draws[b][j]`.
fn summarize(estimates: Vec<f64>, draws: Vec<Vec<f64>>, confidence: f64, sample_size: u64) -> Vec<BootstrapBound> {
    let threshold = reliability_threshold(sample_size);
    estimates
        .into_iter()
        .enumerate()
        .map(|(j, estimate)| {
            let mut column: Vec<f64> = draws.iter().map(|d| d[j]).collect();
            column.sort_by(f64::total_cmp);
            BootstrapBound {
                lower: lower_percentile(&column, confidence),
                estimate,
                reliable: estimate >= threshold,
            }
        })
        .collect()
}

/// Nonparametric bootstrap of a vector-valued statistic. All components are
/// computed from the same resamples.
pub fn bootstrap_percentile_lower_multi<T, F>(
    statistic: F,
    samples: &[T],
    resamples: usize,
    confidence: f64,
    seed: u64,
) -> Result<Vec<BootstrapBound>>
where
    T: Clone + Send + Sync,
    F: Fn(&[T]) -> Vec<f64> + Sync,
{
    check_resamples(resamples)?;
    check_confidence(confidence)?;
    if samples.is_empty() {
        return Err(Error::InvalidParameter("bootstrap needs at least one sample".into()));
    }
    let key = StreamKey::new(seed, domain::BOOTSTRAP);
    let n = samples.len();
    let estimates = statistic(samples);
    let draws: Vec<Vec<f64>> = (0..resamples as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = key.rng(b);
            let resample: Vec<T> = (0..n).map(|_| samples[rng.random_range(0..n)].clone()).collect();
            statistic(&resample)
        })
        .collect();
    Ok(summarize(estimates, draws, confidence, n as u64))
}

/// Scalar form of [`bootstrap_percentile_lower_multi`].
pub fn bootstrap_percentile_lower<T, F>(
    statistic: F,
    samples: &[T],
    resamples: usize,
    confidence: f64,
    seed: u64,
) -> Result<BootstrapBound>
where
    T: Clone + Send + Sync,
    F: Fn(&[T]) -> f64 + Sync,
{
    let bounds = bootstrap_percentile_lower_multi(|s| vec![statistic(s)], samples, resamples, confidence, seed)?;
    Ok(bounds[0])
}

/// Bootstrap for categorical samples summarized as two count vectors.
///
/// Resampling `n` categorical outcomes with replacement is the same as a
/// `Multinomial(n, counts/n)` draw, so each side is resampled directly in
/// count space. `n` for the reliability rule is the smaller sample.
pub fn bootstrap_counts_lower<F>(
    counts_a: &[u64],
    counts_b: &[u64],
    statistic: F,
    resamples: usize,
    confidence: f64,
    seed: u64,
) -> Result<Vec<BootstrapBound>>
where
    F: Fn(&[u64], &[u64]) -> Vec<f64> + Sync,
{
    check_resamples(resamples)?;
    check_confidence(confidence)?;
    let n_a: u64 = counts_a.iter().sum();
    let n_b: u64 = counts_b.iter().sum();
    if n_a == 0 || n_b == 0 {
        return Err(Error::DegenerateTally);
    }
    let key = StreamKey::new(seed, domain::BOOTSTRAP);
    let estimates = statistic(counts_a, counts_b);
    let draws: Vec<Vec<f64>> = (0..resamples as u64)
        .into_par_iter()
        .map(|b| {
            let mut rng = key.rng(b);
            let a = resample_counts(counts_a, &mut rng);
            let bb = resample_counts(counts_b, &mut rng);
            statistic(&a, &bb)
        })
        .collect();
    Ok(summarize(estimates, draws, confidence, n_a.min(n_b)))
}
