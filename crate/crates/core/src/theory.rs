//! Data-independent RDP upper bounds for the Gaussian histogram release and
//! the group-privacy conversions.

use crate::curve::{validate_orders, RdpCurve};
use crate::error::{Error, Result};

/// ℓ2 sensitivity of a vote histogram when one vote moves between two bins.
pub const VOTE_SWAP_SENSITIVITY: f64 = std::f64::consts::SQRT_2;

/// `ρ(α) = Δ²·α / (2σ²)`: RDP of releasing the whole noisy histogram.
///
/// The noisy argmax is post-processing of that release, so this bounds it
/// as well.
pub fn gaussian_rdp_bound(sigma: f64, sensitivity: f64, orders: &[f64]) -> Result<RdpCurve> {
    gaussian_group_rdp_bound(sigma, sensitivity, 1, orders)
}

/// `ρ(α) = m²·Δ²·α / (2σ²)` for datasets differing in `m` records.
pub fn gaussian_group_rdp_bound(sigma: f64, sensitivity: f64, group_size: u32, orders: &[f64]) -> Result<RdpCurve> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma must be > 0, got {sigma}")));
    }
    if !(sensitivity > 0.0) {
        return Err(Error::InvalidParameter(format!("sensitivity must be > 0, got {sensitivity}")));
    }
    if group_size == 0 {
        return Err(Error::InvalidParameter("group size must be at least 1".into()));
    }
    validate_orders(orders)?;
    let m = group_size as f64;
    let scale = m * m * sensitivity * sensitivity / (2.0 * sigma * sigma);
    RdpCurve::new(orders.to_vec(), orders.iter().map(|a| a * scale).collect())
}

/// Generic group conversion: an `(α, ρ)` guarantee implies
/// `(α / 2^m, 3^m ρ)` for groups of size `m`.
pub fn generic_group_rdp(order: f64, rho: f64, group_size: u32) -> Result<(f64, f64)> {
    let reduced = order / 2f64.powi(group_size as i32);
    if !(reduced > 1.0) {
        return Err(Error::OrderUnderflow { order, reduced });
    }
    Ok((reduced, 3f64.powi(group_size as i32) * rho))
}
