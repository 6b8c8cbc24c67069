//! The Gaussian noisy-argmax mechanism over vote histograms.
//!
//! Sampling uses counter-based streams (see [`crate::rng`]). The exact output
//! distribution is computed by one-dimensional quadrature per class:
//!
//! ```text
//! Pr[c] = ∫ φ(z) ∏_{i≠c} Φ(z + (n_c − n_i)/σ) dz
//! ```
//!
//! The integrand is log-concave with curvature at least one, so it is
//! integrated in log space over a window of ±12 around its mode after
//! dividing out the peak value. Every class probability therefore comes with
//! full relative precision, including ones far below `f64::MIN_POSITIVE`
//! when kept as logarithms.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::curve::{validate_orders, RdpCurve};
use crate::error::{Error, Result};
use crate::quadrature::{self, QuadratureOptions};
use crate::rng::{domain, StreamKey};
use crate::special::{log_normal_cdf, normal_pdf};

/// Vote counts per class.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct Histogram {
    counts: Vec<u32>,
}

impl Histogram {
    pub fn new(counts: Vec<u32>) -> Result<Self> {
        if counts.len() < 2 {
            return Err(Error::InvalidHistogram(format!(
                "need at least 2 classes, got {}",
                counts.len()
            )));
        }
        if counts.iter().all(|&c| c == 0) {
            return Err(Error::InvalidHistogram("all counts are zero".into()));
        }
        Ok(Histogram { counts })
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }
}

impl TryFrom<Vec<u32>> for Histogram {
    type Error = Error;
    fn try_from(counts: Vec<u32>) -> Result<Self> {
        Histogram::new(counts)
    }
}

impl From<Histogram> for Vec<u32> {
    fn from(h: Histogram) -> Vec<u32> {
        h.counts
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MechanismParams {
    /// Standard deviation of the Gaussian noise added to every bin.
    pub sigma: f64,
    pub seed: u64,
}

/// Argmax of `counts + sigma·N(0, 1)`; ties go to the lowest index.
#[inline]
pub fn noisy_argmax_with<R: Rng + ?Sized>(counts: &[u32], sigma: f64, rng: &mut R) -> usize {
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (class, &count) in counts.iter().enumerate() {
        let value = if sigma > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            count as f64 + sigma * z
        } else {
            count as f64
        };
        if value > best_value {
            best_value = value;
            best = class;
        }
    }
    best
}

/// Plain argmax with lowest-index tie-breaking.
#[inline]
pub fn argmax(counts: &[u32]) -> usize {
    let mut best = 0;
    for (class, &count) in counts.iter().enumerate() {
        if count > counts[best] {
            best = class;
        }
    }
    best
}

/// A noisy-argmax sampler bound to one seed. Trial `t` always draws the same
/// noise vector, whatever thread evaluates it.
#[derive(Clone, Copy, Debug)]
pub struct NoisyArgmax {
    sigma: f64,
    key: StreamKey,
}

impl NoisyArgmax {
    pub fn new(params: MechanismParams) -> Result<Self> {
        if !(params.sigma >= 0.0) || !params.sigma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sigma must be finite and >= 0, got {}",
                params.sigma
            )));
        }
        Ok(NoisyArgmax {
            sigma: params.sigma,
            key: StreamKey::new(params.seed, domain::MECHANISM),
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    #[inline]
    pub fn sample(&self, counts: &[u32], trial_index: u64) -> usize {
        if self.sigma == 0.0 {
            return argmax(counts);
        }
        noisy_argmax_with(counts, self.sigma, &mut self.key.rng(trial_index))
    }

    /// Independent draws on `a` and `b` for one trial, from a single stream.
    #[inline]
    pub fn sample_pair(&self, a: &[u32], b: &[u32], trial_index: u64) -> (usize, usize) {
        if self.sigma == 0.0 {
            return (argmax(a), argmax(b));
        }
        let mut rng = self.key.rng(trial_index);
        let first = noisy_argmax_with(a, self.sigma, &mut rng);
        (first, noisy_argmax_with(b, self.sigma, &mut rng))
    }
}

/// One draw of the mechanism on `h` for trial `trial_index`.
pub fn noisy_argmax_sample(h: &Histogram, params: &MechanismParams, trial_index: u64) -> Result<usize> {
    Ok(NoisyArgmax::new(*params)?.sample(h.counts(), trial_index))
}

/// Output distribution of the mechanism, kept alongside its logarithms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution {
    pub probs: Vec<f64>,
    pub log_probs: Vec<f64>,
}

impl ClassDistribution {
    pub fn num_classes(&self) -> usize {
        self.probs.len()
    }
}

/// Residual allowed between the raw quadrature sum and one.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;
/// Half-width of the integration window around the integrand's mode.
pub const WINDOW_HALF_WIDTH: f64 = 12.0;

/// `ln` of the unnormalized class-`c` integrand, minus the `ln √(2π)` constant.
#[inline]
fn log_integrand(z: f64, shifts: &[f64]) -> f64 {
    -0.5 * z * z + shifts.iter().map(|&d| log_normal_cdf(z + d)).sum::<f64>()
}

/// Mode of a strictly concave function on `[lo, hi]` by golden-section search.
fn concave_mode<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > 1e-9 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

/// `ln Pr[c]` before normalization.
fn log_class_mass(counts: &[u32], sigma: f64, class: usize, options: QuadratureOptions) -> Result<f64> {
    let nc = counts[class] as f64;
    let shifts: Vec<f64> = counts
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != class)
        .map(|(_, &ni)| (nc - ni as f64) / sigma)
        .collect();
    // The mode is positive and lies below 1 + Σ max(0, −shift).
    let upper = 1.0 + shifts.iter().map(|&d| (-d).max(0.0)).sum::<f64>();
    let mode = concave_mode(|z| log_integrand(z, &shifts), -1.0, upper);
    let peak = log_integrand(mode, &shifts);
    let scaled = |z: f64| (log_integrand(z, &shifts) - peak).exp();
    let result = quadrature::integrate(
        scaled,
        mode - WINDOW_HALF_WIDTH,
        mode + WINDOW_HALF_WIDTH,
        options,
    )
    .map_err(|e| Error::QuadratureFailure {
        class,
        subdivisions: e.0.subdivisions,
        error: e.0.error,
    })?;
    // φ(z) = exp(−z²/2) / √(2π): restore the constant dropped in log_integrand.
    Ok(peak + result.value.ln() + normal_pdf(0.0).ln())
}

/// Exact output distribution of the noisy argmax on `h` with noise `sigma`.
pub fn class_probabilities(h: &Histogram, sigma: f64) -> Result<ClassDistribution> {
    class_probabilities_with(h, sigma, QuadratureOptions::default())
}

pub fn class_probabilities_with(
    h: &Histogram,
    sigma: f64,
    options: QuadratureOptions,
) -> Result<ClassDistribution> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "sigma must be finite and > 0, got {sigma}"
        )));
    }
    let counts = h.counts();
    let log_mass = (0..counts.len())
        .map(|c| log_class_mass(counts, sigma, c, options))
        .collect::<Result<Vec<_>>>()?;
    let log_total = log_sum_exp(&log_mass);
    let residual = log_total.exp_m1();
    if !(residual.abs() <= NORMALIZATION_TOLERANCE) {
        return Err(Error::NormalizationFailure { residual });
    }
    let log_probs: Vec<f64> = log_mass.iter().map(|&l| l - log_total).collect();
    let probs = log_probs.iter().map(|&l| l.exp()).collect();
    Ok(ClassDistribution { probs, log_probs })
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max == f64::INFINITY {
        return max;
    }
    max + values.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}

/// `D_α(P‖Q)` for two distributions given as log-probabilities.
///
/// Returns `+∞` when some class has `q_c = 0 < p_c`. Tiny negative values
/// from rounding are clipped to zero.
pub fn renyi_divergence_from_logs(log_p: &[f64], log_q: &[f64], order: f64) -> f64 {
    debug_assert_eq!(log_p.len(), log_q.len());
    let mut terms = Vec::with_capacity(log_p.len());
    for (&lp, &lq) in log_p.iter().zip(log_q) {
        if lp == f64::NEG_INFINITY {
            continue;
        }
        if lq == f64::NEG_INFINITY {
            return f64::INFINITY;
        }
        terms.push(order * lp + (1.0 - order) * lq);
    }
    (log_sum_exp(&terms) / (order - 1.0)).max(0.0)
}

/// Exact Rényi divergence between the mechanism's outputs on `h1` and `h2`.
pub fn renyi_divergence_exact(h1: &Histogram, h2: &Histogram, sigma: f64, orders: &[f64]) -> Result<RdpCurve> {
    if h1.num_classes() != h2.num_classes() {
        return Err(Error::InvalidHistogram(format!(
            "class counts differ: {} vs {}",
            h1.num_classes(),
            h2.num_classes()
        )));
    }
    validate_orders(orders)?;
    if h1 == h2 {
        return RdpCurve::new(orders.to_vec(), vec![0.0; orders.len()]);
    }
    let p = class_probabilities(h1, sigma)?;
    let q = class_probabilities(h2, sigma)?;
    let values = orders
        .iter()
        .map(|&a| renyi_divergence_from_logs(&p.log_probs, &q.log_probs, a))
        .collect();
    RdpCurve::new(orders.to_vec(), values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::normal_cdf;

    fn hist(c: &[u32]) -> Histogram {
        Histogram::new(c.to_vec()).unwrap()
    }

    #[test]
    fn histogram_invariants() {
        assert!(Histogram::new(vec![3]).is_err());
        assert!(Histogram::new(vec![0, 0, 0]).is_err());
        assert!(Histogram::new(vec![0, 1]).is_ok());
        let h: Histogram = serde_json::from_str("[14,12,10,8,6]").unwrap();
        assert_eq!(h.total(), 50);
        assert!(serde_json::from_str::<Histogram>("[0,0]").is_err());
    }

    #[test]
    fn noiseless_argmax_and_ties() {
        let p = MechanismParams { sigma: 0.0, seed: 1 };
        for t in 0..10 {
            assert_eq!(noisy_argmax_sample(&hist(&[5, 5, 5]), &p, t).unwrap(), 0);
            assert_eq!(noisy_argmax_sample(&hist(&[10, 3]), &p, t).unwrap(), 0);
            assert_eq!(noisy_argmax_sample(&hist(&[1, 3, 3]), &p, t).unwrap(), 1);
        }
        assert!(NoisyArgmax::new(MechanismParams { sigma: -1.0, seed: 0 }).is_err());
    }

    #[test]
    fn sampling_is_order_independent() {
        let m = NoisyArgmax::new(MechanismParams { sigma: 3.0, seed: 99 }).unwrap();
        let counts = [14, 12, 10, 8, 6];
        let forward: Vec<usize> = (0..200).map(|t| m.sample(&counts, t)).collect();
        let backward: Vec<usize> = (0..200).rev().map(|t| m.sample(&counts, t)).collect();
        assert!(forward.iter().eq(backward.iter().rev()));
    }

    #[test]
    fn symmetric_two_class() {
        let d = class_probabilities(&hist(&[7, 7]), 1.3).unwrap();
        assert!((d.probs[0] - 0.5).abs() < 1e-12);
        assert!((d.probs[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn two_class_closed_form() {
        for &(a, b, s) in &[(10u32, 3u32, 2.0), (3, 10, 0.5), (250, 0, 20.0), (1, 0, 40.0)] {
            let d = class_probabilities(&hist(&[a, b]), s).unwrap();
            let expected = normal_cdf((a as f64 - b as f64) / (std::f64::consts::SQRT_2 * s));
            assert!((d.probs[0] - expected).abs() < 1e-12, "{a} {b} {s}");
        }
    }

    #[test]
    fn tiny_probabilities_keep_relative_accuracy() {
        // Pr[1] = Φ(−100/√2) ≈ e^{−2504.6}, far below f64 range.
        let d = class_probabilities(&hist(&[100, 0]), 1.0).unwrap();
        let x: f64 = -100.0 / std::f64::consts::SQRT_2;
        let expected = log_normal_cdf(x);
        assert!((d.log_probs[1] - expected).abs() < 1e-9 * expected.abs());
        assert_eq!(d.probs[1], 0.0);
    }

    #[test]
    fn identical_histograms_have_zero_divergence() {
        let h = hist(&[14, 12, 10, 8, 6]);
        let c = renyi_divergence_exact(&h, &h, 2.0, &crate::curve::DEFAULT_ORDERS).unwrap();
        assert!(c.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_mass_in_q_gives_infinity() {
        let lp = [0.5f64.ln(), 0.5f64.ln()];
        let lq = [0.0, f64::NEG_INFINITY];
        assert_eq!(renyi_divergence_from_logs(&lp, &lq, 2.0), f64::INFINITY);
        // p_c = 0 terms are skipped.
        assert_eq!(renyi_divergence_from_logs(&lq, &lp, 2.0), 2f64.ln());
    }

    #[test]
    fn mismatched_class_counts_are_rejected() {
        let r = renyi_divergence_exact(&hist(&[1, 2]), &hist(&[1, 2, 3]), 1.0, &[2.0]);
        assert!(matches!(r, Err(Error::InvalidHistogram(_))));
    }
}
