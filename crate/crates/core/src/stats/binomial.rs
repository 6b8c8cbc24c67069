use serde::{Deserialize, Serialize};

use super::check_confidence;
use crate::error::{Error, Result};
use crate::special::beta_quantile;

/// Two-sided exact interval for a binomial proportion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BinomialBounds {
    pub successes: u64,
    pub trials: u64,
    pub lower: f64,
    pub upper: f64,
    pub confidence: f64,
}

fn check_counts(successes: u64, trials: u64) -> Result<()> {
    if trials == 0 || successes > trials {
        return Err(Error::InvalidCount { successes, trials });
    }
    Ok(())
}

/// One-sided lower bound: `Pr[p < lower] ≤ 1 − level` for every true `p`.
pub fn clopper_pearson_lower(successes: u64, trials: u64, level: f64) -> Result<f64> {
    check_counts(successes, trials)?;
    check_confidence(level)?;
    if successes == 0 {
        return Ok(0.0);
    }
    let k = successes as f64;
    let n = trials as f64;
    Ok(beta_quantile(1.0 - level, k, n - k + 1.0))
}

/// One-sided upper bound: `Pr[p > upper] ≤ 1 − level` for every true `p`.
pub fn clopper_pearson_upper(successes: u64, trials: u64, level: f64) -> Result<f64> {
    check_counts(successes, trials)?;
    check_confidence(level)?;
    if successes == trials {
        return Ok(1.0);
    }
    let k = successes as f64;
    let n = trials as f64;
    Ok(beta_quantile(level, k + 1.0, n - k))
}

/// Clopper–Pearson interval with `(1 − confidence)/2` in each tail.
pub fn clopper_pearson(successes: u64, trials: u64, confidence: f64) -> Result<BinomialBounds> {
    check_confidence(confidence)?;
    let tail_level = 1.0 - (1.0 - confidence) / 2.0;
    let lower = clopper_pearson_lower(successes, trials, tail_level)?;
    let upper = clopper_pearson_upper(successes, trials, tail_level)?;
    let p_hat = successes as f64 / trials as f64;
    Ok(BinomialBounds {
        successes,
        trials,
        lower: lower.min(p_hat),
        upper: upper.max(p_hat),
        confidence,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundaries() {
        let b = clopper_pearson(0, 100, 0.95).unwrap();
        assert_eq!(b.lower, 0.0);
        assert!((b.upper - (1.0 - 0.025f64.powf(0.01))).abs() < 1e-10);
        let b = clopper_pearson(100, 100, 0.95).unwrap();
        assert_eq!(b.upper, 1.0);
        assert!((b.lower - 0.025f64.powf(0.01)).abs() < 1e-10);
    }

    #[test]
    fn invalid_inputs() {
        assert!(matches!(clopper_pearson(5, 4, 0.95), Err(Error::InvalidCount { .. })));
        assert!(matches!(clopper_pearson(0, 0, 0.95), Err(Error::InvalidCount { .. })));
        assert!(clopper_pearson(1, 4, 1.0).is_err());
    }

    #[test]
    fn width_shrinks_with_sample_size() {
        let small = clopper_pearson(3_000, 10_000, 0.95).unwrap();
        let large = clopper_pearson(300_000, 1_000_000, 0.95).unwrap();
        assert!(large.upper - large.lower < small.upper - small.lower);
        let ratio = (small.upper - small.lower) / (large.upper - large.lower);
        assert!((ratio - 10.0).abs() < 0.2, "width ratio {ratio}");
    }
}
