use serde::{Deserialize, Serialize};

use super::check_confidence;
use crate::error::{Error, Result};
use crate::special::{ln_gamma, normal_quantile, poisson_cdf, poisson_ln_pmf};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimultaneousMethod {
    /// Per-cell score intervals with a Bonferroni-adjusted χ²(1) critical value.
    #[default]
    Goodman,
    /// Equal-width intervals calibrated by an Edgeworth-corrected
    /// truncated-Poisson approximation of the multinomial.
    SisonGlaz,
}

/// Simultaneous bounds for every cell of a multinomial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MultinomialBounds {
    pub cell_counts: Vec<u64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub confidence: f64,
    pub method: SimultaneousMethod,
    /// Some cell had a zero count; its lower bound is pinned at zero.
    pub degenerate: bool,
}

pub fn simultaneous_bounds(counts: &[u64], confidence: f64, method: SimultaneousMethod) -> Result<MultinomialBounds> {
    check_confidence(confidence)?;
    if counts.len() < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 cells, got {}", counts.len())));
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::InvalidCount { successes: 0, trials: 0 });
    }
    let (mut lower, mut upper) = match method {
        SimultaneousMethod::Goodman => goodman(counts, total, confidence),
        SimultaneousMethod::SisonGlaz => sison_glaz(counts, total, confidence),
    };
    // Clip and make sure each interval contains its point estimate.
    for (i, &c) in counts.iter().enumerate() {
        let p_hat = c as f64 / total as f64;
        lower[i] = lower[i].clamp(0.0, 1.0).min(p_hat);
        upper[i] = upper[i].clamp(0.0, 1.0).max(p_hat);
        if c == 0 {
            lower[i] = 0.0;
        }
        if c == total {
            upper[i] = 1.0;
        }
    }
    Ok(MultinomialBounds {
        cell_counts: counts.to_vec(),
        lower,
        upper,
        confidence,
        method,
        degenerate: counts.iter().any(|&c| c == 0),
    })
}

fn goodman(counts: &[u64], total: u64, confidence: f64) -> (Vec<f64>, Vec<f64>) {
    let k = counts.len() as f64;
    let n = total as f64;
    let z = normal_quantile(1.0 - (1.0 - confidence) / (2.0 * k));
    let a = z * z;
    let mut lower = Vec::with_capacity(counts.len());
    let mut upper = Vec::with_capacity(counts.len());
    for &c in counts {
        let c = c as f64;
        let center = a + 2.0 * c;
        let spread = (a * (a + 4.0 * c * (n - c) / n)).sqrt();
        let denom = 2.0 * (n + a);
        lower.push((center - spread) / denom);
        upper.push((center + spread) / denom);
    }
    (lower, upper)
}

/// Mean, variance, third and fourth central moments of a Poisson(λ)
/// truncated to `[λ − c, λ + c]`, plus the retained mass.
fn truncated_poisson_moments(c: f64, lambda: f64) -> [f64; 5] {
    if lambda == 0.0 {
        return [0.0, 0.0, 0.0, 0.0, 1.0];
    }
    let a = (lambda + c).floor() as i64;
    let b = ((lambda - c).ceil() as i64).max(0);
    let mass = poisson_cdf(a, lambda) - poisson_cdf(b - 1, lambda);
    // Factorial moments: E[X(X−1)…(X−r+1)] = λ^r · Pr[b−r ≤ Y ≤ a−r] / mass.
    let window = |lo: i64, hi: i64| -> f64 {
        // Pr[lo ≤ Y ≤ hi] as the truncated mass minus the dropped end terms.
        let mut p = mass;
        for k in (hi + 1).max(0)..=a {
            p -= poisson_ln_pmf(k as u64, lambda).exp();
        }
        for k in lo.max(0)..b {
            p += poisson_ln_pmf(k as u64, lambda).exp();
        }
        p
    };
    let mut mu = [0.0; 4];
    for (r, m) in mu.iter_mut().enumerate() {
        let r = r as i64 + 1;
        *m = lambda.powi(r as i32) * window(b - r, a - r) / mass;
    }
    let (m1, m2, m3, m4) = (mu[0], mu[1], mu[2], mu[3]);
    let var = m2 + m1 - m1 * m1;
    let third = m3 + m2 * (3.0 - 3.0 * m1) + (m1 - 3.0 * m1 * m1 + 2.0 * m1.powi(3));
    let fourth = m4
        + m3 * (6.0 - 4.0 * m1)
        + m2 * (7.0 - 12.0 * m1 + 6.0 * m1 * m1)
        + m1
        - 4.0 * m1 * m1
        + 6.0 * m1.powi(3)
        - 3.0 * m1.powi(4);
    [m1, var, third, fourth, mass]
}

/// Approximate `Pr[|N_i − n_i| ≤ c for all i]` under the multinomial fitted
/// to `counts`.
fn sison_glaz_coverage(c: f64, counts: &[u64], total: u64) -> f64 {
    let n = total as f64;
    let mut sums = [0.0f64; 4];
    let mut ln_mass = 0.0;
    for &x in counts {
        let m = truncated_poisson_moments(c, x as f64);
        sums[0] += m[0];
        sums[1] += m[1];
        sums[2] += m[2];
        sums[3] += m[3] - 3.0 * m[1] * m[1];
        ln_mass += m[4].ln();
    }
    let [s1, s2, s3, s4] = sums;
    if s2 <= 0.0 {
        return 1.0;
    }
    let z = (n - s1) / s2.sqrt();
    let g1 = s3 / s2.powf(1.5);
    let g2 = s4 / (s2 * s2);
    let poly = 1.0
        + g1 * (z.powi(3) - 3.0 * z) / 6.0
        + g2 * (z.powi(4) - 6.0 * z * z + 3.0) / 24.0
        + g1 * g1 * (z.powi(6) - 15.0 * z.powi(4) + 45.0 * z * z - 15.0) / 72.0;
    let density = poly * (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    // 1 / Pr[Poisson(n) = n]
    let ln_inv_pn = -(n * n.ln() - n - ln_gamma(n + 1.0));
    (ln_inv_pn + ln_mass).exp() * density / s2.sqrt()
}

fn sison_glaz(counts: &[u64], total: u64, confidence: f64) -> (Vec<f64>, Vec<f64>) {
    let coverage = |c: u64| sison_glaz_coverage(c as f64, counts, total);
    // Smallest c ≥ 1 with coverage(c) > confidence, by doubling then bisection.
    let mut hi = 1u64;
    while coverage(hi) <= confidence && hi < total {
        hi = (hi * 2).min(total);
    }
    let mut lo = 0u64;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if coverage(mid) > confidence {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let c_hi = hi;
    let v_hi = coverage(c_hi);
    let v_lo = if c_hi > 1 { coverage(c_hi - 1) } else { 0.0 };
    let delta = ((confidence - v_lo) / (v_hi - v_lo)).clamp(0.0, 1.0);
    let c = (c_hi - 1) as f64;
    let n = total as f64;
    let lower = counts.iter().map(|&x| x as f64 / n - c / n).collect();
    let upper = counts.iter().map(|&x| x as f64 / n + c / n + 2.0 * delta / n).collect();
    (lower, upper)
}
