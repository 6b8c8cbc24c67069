use serde::{Deserialize, Serialize};

use super::{AuditMethod, AuditResult, OutcomeTally, OutputSet, Validity};
use crate::curve::{validate_orders, RdpCurve};
use crate::error::{Error, Result};
use crate::mechanism::{log_sum_exp, renyi_divergence_from_logs};
use crate::stats::{
    bootstrap_counts_lower, check_confidence, clopper_pearson_lower, clopper_pearson_upper, simultaneous_bounds,
    SimultaneousMethod,
};

/// Bounds on `p₁ = Pr[M(S) ∈ O]` and `p₂ = Pr[M(S′) ∈ O]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProportionBounds {
    pub p1_lower: f64,
    pub p1_upper: f64,
    pub p2_lower: f64,
    pub p2_upper: f64,
}

impl ProportionBounds {
    /// Degenerate bounds at known proportions.
    pub fn exact(p1: f64, p2: f64) -> Self {
        ProportionBounds { p1_lower: p1, p1_upper: p1, p2_lower: p2, p2_upper: p2 }
    }
}

/// `α ln a + (1 − α) ln b` with `0^α = 0` and `0^{1−α} = ∞`.
fn log_term(a: f64, b: f64, order: f64) -> f64 {
    if a <= 0.0 {
        f64::NEG_INFINITY
    } else if b <= 0.0 {
        f64::INFINITY
    } else {
        order * a.ln() + (1.0 - order) * b.ln()
    }
}

/// The 2-cut lower bound at one order, clipped at zero:
///
/// `(1/(α−1)) ln(p₁ₗ^α p₂ᵤ^{1−α} + (1−p₁ᵤ)^α (1−p₂ₗ)^{1−α})`.
pub fn two_cut_from_bounds(bounds: &ProportionBounds, order: f64) -> f64 {
    let t1 = log_term(bounds.p1_lower, bounds.p2_upper, order);
    let t2 = log_term(1.0 - bounds.p1_upper, 1.0 - bounds.p2_lower, order);
    (log_sum_exp(&[t1, t2]) / (order - 1.0)).max(0.0)
}

/// Divergence between `Bernoulli(p1)` and `Bernoulli(p2)`.
pub fn plug_in_two_cut(p1: f64, p2: f64, order: f64) -> f64 {
    two_cut_from_bounds(&ProportionBounds::exact(p1, p2), order)
}

/// Divergence between two empirical class distributions.
pub fn plug_in_k_cut(p: &[f64], q: &[f64], order: f64) -> f64 {
    let lp: Vec<f64> = p.iter().map(|v| v.ln()).collect();
    let lq: Vec<f64> = q.iter().map(|v| v.ln()).collect();
    renyi_divergence_from_logs(&lp, &lq, order)
}

fn frequencies(counts: &[u64]) -> Vec<f64> {
    let n: u64 = counts.iter().sum();
    counts.iter().map(|&c| c as f64 / n as f64).collect()
}

/// Four one-sided Clopper–Pearson bounds, each at level `1 − β/4`, so all
/// hold together with probability at least `confidence = 1 − β`.
pub fn proportion_bounds(tally: &OutcomeTally, output_set: &OutputSet, confidence: f64) -> Result<ProportionBounds> {
    check_confidence(confidence)?;
    tally.check_nonempty()?;
    let level = 1.0 - (1.0 - confidence) / 4.0;
    let (k1, n1) = (output_set.mass(&tally.counts_s), tally.trials_s());
    let (k2, n2) = (output_set.mass(&tally.counts_s_prime), tally.trials_s_prime());
    Ok(ProportionBounds {
        p1_lower: clopper_pearson_lower(k1, n1, level)?,
        p1_upper: clopper_pearson_upper(k1, n1, level)?,
        p2_lower: clopper_pearson_lower(k2, n2, level)?,
        p2_upper: clopper_pearson_upper(k2, n2, level)?,
    })
}

fn check_set(tally: &OutcomeTally, output_set: &OutputSet) -> Result<()> {
    match output_set.classes().last() {
        Some(&c) if c < tally.num_classes() && output_set.classes().len() < tally.num_classes() => Ok(()),
        _ => Err(Error::EmptySet),
    }
}

/// Finite-sample lower bound on `D_α(M(S) ‖ M(S′))` at every order from
/// a 2-cut at `output_set`. All orders hold simultaneously.
pub fn two_cut_audit(
    tally: &OutcomeTally,
    output_set: &OutputSet,
    orders: &[f64],
    confidence: f64,
) -> Result<AuditResult> {
    validate_orders(orders)?;
    check_set(tally, output_set)?;
    let bounds = proportion_bounds(tally, output_set, confidence)?;
    let values = orders.iter().map(|&a| two_cut_from_bounds(&bounds, a)).collect();
    Ok(AuditResult {
        method: AuditMethod::TwoCut,
        curve: RdpCurve::new(orders.to_vec(), values)?,
        confidence,
        output_set: Some(output_set.clone()),
        validity: vec![Validity::FiniteSample; orders.len()],
        trials_s: tally.trials_s(),
        trials_s_prime: tally.trials_s_prime(),
    })
}

/// Picks the 2-cut output set on pilot data: the singleton or singleton
/// complement with the largest plug-in divergence at the median order.
/// Ties go to the earlier candidate in the order `{0}, ¬{0}, {1}, ¬{1}, …`.
pub fn select_output_set(pilot: &OutcomeTally, orders: &[f64]) -> Result<OutputSet> {
    validate_orders(orders)?;
    let k = pilot.num_classes();
    let first = OutputSet::singleton(0, k)?;
    let (n1, n2) = (pilot.trials_s(), pilot.trials_s_prime());
    if n1 == 0 || n2 == 0 {
        return Ok(first);
    }
    let order = orders[(orders.len() - 1) / 2];
    let mut best = (first, f64::NEG_INFINITY);
    for c in 0..k {
        let single = OutputSet::singleton(c, k)?;
        let complement = single.complement(k)?;
        for set in [single, complement] {
            let p1 = set.mass(&pilot.counts_s) as f64 / n1 as f64;
            let p2 = set.mass(&pilot.counts_s_prime) as f64 / n2 as f64;
            let score = plug_in_two_cut(p1, p2, order);
            if score > best.1 {
                best = (set, score);
            }
        }
    }
    Ok(best.0)
}

/// Asymptotic lower bound from simultaneous multinomial intervals at level
/// `1 − β/2` on each side.
pub fn k_cut_audit(
    tally: &OutcomeTally,
    orders: &[f64],
    confidence: f64,
    method: SimultaneousMethod,
) -> Result<AuditResult> {
    validate_orders(orders)?;
    check_confidence(confidence)?;
    tally.check_nonempty()?;
    let level = 1.0 - (1.0 - confidence) / 2.0;
    let s = simultaneous_bounds(&tally.counts_s, level, method)?;
    let sp = simultaneous_bounds(&tally.counts_s_prime, level, method)?;
    let log_lower: Vec<f64> = s.lower.iter().map(|v| v.ln()).collect();
    let log_upper: Vec<f64> = sp.upper.iter().map(|v| v.ln()).collect();
    let values = orders
        .iter()
        .map(|&a| renyi_divergence_from_logs(&log_lower, &log_upper, a))
        .collect();
    Ok(AuditResult {
        method: AuditMethod::KCut,
        curve: RdpCurve::new(orders.to_vec(), values)?,
        confidence,
        output_set: None,
        validity: vec![Validity::Asymptotic; orders.len()],
        trials_s: tally.trials_s(),
        trials_s_prime: tally.trials_s_prime(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum BootstrapVariant {
    TwoCut(OutputSet),
    KCut,
}

/// Percentile-bootstrap lower bound on the plug-in divergence, order by
/// order. Orders whose estimate falls below `1/√n` are marked unreliable.
pub fn bootstrap_audit(
    tally: &OutcomeTally,
    variant: &BootstrapVariant,
    orders: &[f64],
    confidence: f64,
    resamples: usize,
    seed: u64,
) -> Result<AuditResult> {
    validate_orders(orders)?;
    let (method, output_set, bounds) = match variant {
        BootstrapVariant::TwoCut(set) => {
            check_set(tally, set)?;
            let bounds = bootstrap_counts_lower(
                &tally.counts_s,
                &tally.counts_s_prime,
                |a, b| {
                    let p1 = set.mass(a) as f64 / a.iter().sum::<u64>() as f64;
                    let p2 = set.mass(b) as f64 / b.iter().sum::<u64>() as f64;
                    orders.iter().map(|&o| plug_in_two_cut(p1, p2, o)).collect()
                },
                resamples,
                confidence,
                seed,
            )?;
            (AuditMethod::TwoCutBootstrap, Some(set.clone()), bounds)
        }
        BootstrapVariant::KCut => {
            let bounds = bootstrap_counts_lower(
                &tally.counts_s,
                &tally.counts_s_prime,
                |a, b| {
                    let (p, q) = (frequencies(a), frequencies(b));
                    orders.iter().map(|&o| plug_in_k_cut(&p, &q, o)).collect()
                },
                resamples,
                confidence,
                seed,
            )?;
            (AuditMethod::KCutBootstrap, None, bounds)
        }
    };
    let values = bounds.iter().map(|b| b.lower.max(0.0)).collect();
    let validity = bounds
        .iter()
        .map(|b| if b.reliable { Validity::Asymptotic } else { Validity::Unreliable })
        .collect();
    Ok(AuditResult {
        method,
        curve: RdpCurve::new(orders.to_vec(), values)?,
        confidence,
        output_set,
        validity,
        trials_s: tally.trials_s(),
        trials_s_prime: tally.trials_s_prime(),
    })
}

/// `ε̂ = ln max{(p₁ₗ − δ)/p₂ᵤ, (p₂ₗ − δ)/p₁ᵤ}`, clipped at zero.
pub fn epsilon_lower_from_bounds(bounds: &ProportionBounds, delta: f64) -> f64 {
    let ratio = |num: f64, den: f64| if num <= 0.0 { 0.0 } else { num / den };
    let r = ratio(bounds.p1_lower - delta, bounds.p2_upper).max(ratio(bounds.p2_lower - delta, bounds.p1_upper));
    if r <= 1.0 {
        0.0
    } else {
        r.ln()
    }
}

/// Lower bound on the ε of any `(ε, δ)`-DP guarantee, from a 2-cut.
pub fn approx_dp_audit(tally: &OutcomeTally, output_set: &OutputSet, delta: f64, confidence: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidParameter(format!("delta must lie in [0, 1), got {delta}")));
    }
    check_set(tally, output_set)?;
    let bounds = proportion_bounds(tally, output_set, confidence)?;
    Ok(epsilon_lower_from_bounds(&bounds, delta))
}
