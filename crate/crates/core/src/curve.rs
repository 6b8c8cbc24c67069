//! Rényi curves: per-order divergence values, their composition, and the
//! conversion from RDP to approximate DP.

use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// Orders audited when the caller does not choose a grid.
pub const DEFAULT_ORDERS: [f64; 12] = [1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0, 32.0, 48.0, 64.0];

pub fn default_orders() -> Vec<f64> {
    DEFAULT_ORDERS.to_vec()
}

/// Checks that `orders` is non-empty, strictly increasing and above one.
pub fn validate_orders(orders: &[f64]) -> Result<()> {
    if orders.is_empty() {
        return Err(Error::InvalidParameter("order grid is empty".into()));
    }
    if let Some(&bad) = orders.iter().find(|&&a| !(a > 1.0) || !a.is_finite()) {
        return Err(Error::InvalidParameter(format!("order {bad} is not a finite value above 1")));
    }
    if orders.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("orders must be strictly increasing".into()));
    }
    Ok(())
}

/// Divergence (or bound) values in nats, one per Rényi order.
///
/// Values may be `+∞`; JSON encodes those as `null`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCurve")]
pub struct RdpCurve {
    orders: Vec<f64>,
    #[serde(serialize_with = "serialize_values")]
    values: Vec<f64>,
}

#[derive(Deserialize)]
struct RawCurve {
    orders: Vec<f64>,
    values: Vec<Option<f64>>,
}

impl TryFrom<RawCurve> for RdpCurve {
    type Error = Error;
    fn try_from(raw: RawCurve) -> Result<Self> {
        let values = raw.values.into_iter().map(|v| v.unwrap_or(f64::INFINITY)).collect();
        RdpCurve::new(raw.orders, values)
    }
}

fn serialize_values<S: Serializer>(values: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(values.iter().map(|v| if v.is_finite() { Some(*v) } else { None }))
}

impl RdpCurve {
    pub fn new(orders: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        validate_orders(&orders)?;
        if orders.len() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "{} orders but {} values",
                orders.len(),
                values.len()
            )));
        }
        if let Some(&bad) = values.iter().find(|&&v| !(v >= 0.0)) {
            return Err(Error::InvalidParameter(format!("curve value {bad} is negative or NaN")));
        }
        Ok(RdpCurve { orders, values })
    }

    pub fn zeros(orders: &[f64]) -> Result<Self> {
        RdpCurve::new(orders.to_vec(), vec![0.0; orders.len()])
    }

    pub fn orders(&self) -> &[f64] {
        &self.orders
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.orders.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.orders.iter().copied().zip(self.values.iter().copied())
    }

    /// Value at `order`, if it is on the grid.
    pub fn value_at(&self, order: f64) -> Option<f64> {
        self.orders.iter().position(|&a| a == order).map(|i| self.values[i])
    }

    /// The curve of `times` sequential repetitions of this mechanism.
    pub fn repeated(&self, times: u32) -> RdpCurve {
        RdpCurve {
            orders: self.orders.clone(),
            values: self.values.iter().map(|v| v * times as f64).collect(),
        }
    }
}

/// Order-wise sum: RDP of the adaptive composition of the given mechanisms.
pub fn compose_curves(curves: &[RdpCurve]) -> Result<RdpCurve> {
    let first = curves
        .first()
        .ok_or_else(|| Error::InvalidParameter("nothing to compose".into()))?;
    let mut values = vec![0.0; first.len()];
    for curve in curves {
        if curve.orders != first.orders {
            return Err(Error::GridMismatch);
        }
        for (acc, v) in values.iter_mut().zip(&curve.values) {
            *acc += v;
        }
    }
    RdpCurve::new(first.orders.clone(), values)
}

/// An `(ε, δ)` guarantee and the order it was read from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DpPoint {
    pub epsilon: f64,
    pub delta: f64,
    pub source_order: f64,
}

/// ε obtained from a single order:
/// `ρ + ln((α−1)/α) − (ln δ + ln α)/(α−1)`.
pub fn epsilon_at_order(order: f64, rho: f64, delta: f64) -> f64 {
    rho + ((order - 1.0) / order).ln() - (delta.ln() + order.ln()) / (order - 1.0)
}

/// Best `(ε, δ)` implied by the curve over its grid of orders.
pub fn rdp_to_dp(curve: &RdpCurve, delta: f64) -> Result<DpPoint> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    let mut best: Option<DpPoint> = None;
    for (order, rho) in curve.iter() {
        let epsilon = epsilon_at_order(order, rho, delta);
        if best.map_or(true, |b| epsilon < b.epsilon) {
            best = Some(DpPoint { epsilon, delta, source_order: order });
        }
    }
    let best = best.expect("curves are never empty");
    if !best.epsilon.is_finite() {
        return Err(Error::InvalidParameter("curve is infinite at every order".into()));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_grid_validation() {
        assert!(validate_orders(&DEFAULT_ORDERS).is_ok());
        assert!(validate_orders(&[]).is_err());
        assert!(validate_orders(&[1.0, 2.0]).is_err());
        assert!(validate_orders(&[2.0, 2.0]).is_err());
        assert!(validate_orders(&[3.0, 2.0]).is_err());
    }

    #[test]
    fn composition_identities() {
        let c = RdpCurve::new(vec![2.0, 4.0], vec![0.1, 0.3]).unwrap();
        assert_eq!(compose_curves(&[c.clone()]).unwrap(), c);
        let z = RdpCurve::zeros(&[2.0, 4.0]).unwrap();
        assert_eq!(compose_curves(&[c.clone(), z]).unwrap(), c);
        let other = RdpCurve::new(vec![2.0, 5.0], vec![0.1, 0.3]).unwrap();
        assert!(matches!(compose_curves(&[c, other]), Err(Error::GridMismatch)));
        assert!(compose_curves(&[]).is_err());
    }

    #[test]
    fn thousand_gaussian_queries() {
        let orders = default_orders();
        let single: Vec<f64> = orders.iter().map(|a| a / (2.0 * 400.0)).collect();
        let one = RdpCurve::new(orders.clone(), single).unwrap();
        let all = compose_curves(&vec![one; 1000]).unwrap();
        for (a, v) in all.iter() {
            assert!((v - 1.25 * a).abs() < 1e-12 * a);
        }
    }

    #[test]
    fn zero_curve_conversion() {
        let c = RdpCurve::zeros(&[64.0]).unwrap();
        let dp = rdp_to_dp(&c, 1e-6).unwrap();
        let expected = (63.0f64 / 64.0).ln() - ((1e-6f64).ln() + 64f64.ln()) / 63.0;
        assert!((dp.epsilon - expected).abs() < 1e-15);
        assert!((dp.epsilon - 0.137_532).abs() < 1e-6);
        assert_eq!(dp.source_order, 64.0);
    }

    #[test]
    fn conversion_rejects_bad_delta() {
        let c = RdpCurve::zeros(&[2.0]).unwrap();
        assert!(rdp_to_dp(&c, 0.0).is_err());
        assert!(rdp_to_dp(&c, 1.0).is_err());
    }

    #[test]
    fn infinite_values_roundtrip_through_json() {
        let c = RdpCurve::new(vec![2.0, 3.0], vec![0.5, f64::INFINITY]).unwrap();
        let json = serde_json::to_string(&c).unwrap();
        assert_eq!(json, r#"{"orders":[2.0,3.0],"values":[0.5,null]}"#);
        let back: RdpCurve = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
        assert!(serde_json::from_str::<RdpCurve>(r#"{"orders":[0.5],"values":[1.0]}"#).is_err());
    }
}
