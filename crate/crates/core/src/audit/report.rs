use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use super::{AuditMethod, AuditResult, Validity};
use crate::curve::{compose_curves, rdp_to_dp, DpPoint, RdpCurve};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "query_id,order,audit_lb,exact,theory,method,confidence,valid";

/// Everything computed for one audited query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryAudit {
    pub query_id: String,
    pub audits: Vec<AuditResult>,
    /// Exact divergence, when the histogram pair is fixed.
    pub exact: Option<RdpCurve>,
    /// Data-independent upper bound.
    pub theory: RdpCurve,
    /// Caveats about how this query was modelled.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// One method's lower bounds composed over the audited queries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComposedAudit {
    pub method: AuditMethod,
    pub curve: RdpCurve,
    /// Union bound over the per-query confidences.
    pub confidence: f64,
    pub validity: Vec<Validity>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConversionKind {
    /// Converted audit curve. Illustrative only: an RDP lower bound does not
    /// yield a lower bound on ε.
    AuditIllustrative,
    /// Guarantee for the specific attack.
    Exact,
    /// Upper bound that holds for every dataset pair.
    Theory,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conversion {
    pub label: String,
    pub kind: ConversionKind,
    /// `None` when the curve is infinite at every order.
    pub point: Option<DpPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub delta: f64,
    pub repetitions: u32,
    pub queries: Vec<QueryAudit>,
    pub composed: Vec<ComposedAudit>,
    pub composed_exact: Option<RdpCurve>,
    pub composed_theory: RdpCurve,
    pub conversions: Vec<Conversion>,
}

fn worst(a: Validity, b: Validity) -> Validity {
    use Validity::*;
    match (a, b) {
        (Unreliable, _) | (_, Unreliable) => Unreliable,
        (Asymptotic, _) | (_, Asymptotic) => Asymptotic,
        _ => FiniteSample,
    }
}

fn convert(label: String, kind: ConversionKind, curve: &RdpCurve, delta: f64) -> Result<Conversion> {
    let point = match rdp_to_dp(curve, delta) {
        Ok(p) => Some(p),
        Err(Error::InvalidParameter(_)) if curve.values().iter().all(|v| v.is_infinite()) => None,
        Err(e) => return Err(e),
    };
    Ok(Conversion { label, kind, point })
}

/// Composes per-query curves, repeated `repetitions` times, and converts
/// the audit, exact and theory curves to `(ε, δ)`.
///
/// A method is composed only if every query was audited with it.
pub fn audited_dp_report(queries: Vec<QueryAudit>, repetitions: u32, delta: f64) -> Result<AuditReport> {
    let first = queries
        .first()
        .ok_or_else(|| Error::InvalidParameter("report needs at least one query".into()))?;
    if repetitions == 0 {
        return Err(Error::InvalidParameter("repetitions must be at least 1".into()));
    }
    let mut composed = Vec::new();
    for audit in &first.audits {
        let per_query: Option<Vec<&AuditResult>> = queries
            .iter()
            .map(|q| q.audits.iter().find(|a| a.method == audit.method))
            .collect();
        let Some(per_query) = per_query else { continue };
        let curves: Vec<RdpCurve> = per_query.iter().map(|a| a.curve.clone()).collect();
        let miss: f64 = per_query.iter().map(|a| 1.0 - a.confidence).sum();
        let mut validity = vec![Validity::FiniteSample; audit.curve.len()];
        for a in &per_query {
            if a.validity.len() != validity.len() {
                return Err(Error::GridMismatch);
            }
            for (v, w) in validity.iter_mut().zip(&a.validity) {
                *v = worst(*v, *w);
            }
        }
        composed.push(ComposedAudit {
            method: audit.method,
            curve: compose_curves(&curves)?.repeated(repetitions),
            confidence: (1.0 - miss).max(0.0),
            validity,
        });
    }
    let theories: Vec<RdpCurve> = queries.iter().map(|q| q.theory.clone()).collect();
    let composed_theory = compose_curves(&theories)?.repeated(repetitions);
    let exacts: Option<Vec<RdpCurve>> = queries.iter().map(|q| q.exact.clone()).collect();
    let composed_exact = match exacts {
        Some(e) => Some(compose_curves(&e)?.repeated(repetitions)),
        None => None,
    };
    if composed.iter().any(|c| c.curve.orders() != composed_theory.orders()) {
        return Err(Error::GridMismatch);
    }

    let mut conversions = Vec::new();
    for c in &composed {
        conversions.push(convert(
            format!("audit:{}", c.method),
            ConversionKind::AuditIllustrative,
            &c.curve,
            delta,
        )?);
    }
    if let Some(e) = &composed_exact {
        conversions.push(convert("exact".into(), ConversionKind::Exact, e, delta)?);
    }
    conversions.push(convert("theory".into(), ConversionKind::Theory, &composed_theory, delta)?);

    Ok(AuditReport {
        delta,
        repetitions,
        queries,
        composed,
        composed_exact,
        composed_theory,
        conversions,
    })
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[allow(clippy::too_many_arguments)]
fn push_rows(
    out: &mut String,
    query_id: &str,
    curve: &RdpCurve,
    exact: Option<&RdpCurve>,
    theory: &RdpCurve,
    method: AuditMethod,
    confidence: f64,
    validity: &[Validity],
) {
    let id = csv_field(query_id);
    for (i, (order, lb)) in curve.iter().enumerate() {
        let exact = exact.map(|e| e.values()[i].to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{id},{order},{lb},{exact},{},{method},{confidence},{}",
            theory.values()[i],
            validity[i].is_always_valid()
        );
    }
}

impl AuditReport {
    /// One row per query, method and order, followed by `composed` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for q in &self.queries {
            for a in &q.audits {
                push_rows(&mut out, &q.query_id, &a.curve, q.exact.as_ref(), &q.theory, a.method, a.confidence, &a.validity);
            }
        }
        for c in &self.composed {
            push_rows(
                &mut out,
                "composed",
                &c.curve,
                self.composed_exact.as_ref(),
                &self.composed_theory,
                c.method,
                c.confidence,
                &c.validity,
            );
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn composed_for(&self, method: AuditMethod) -> Option<&ComposedAudit> {
        self.composed.iter().find(|c| c.method == method)
    }

    pub fn conversion(&self, label: &str) -> Option<&Conversion> {
        self.conversions.iter().find(|c| c.label == label)
    }
}
