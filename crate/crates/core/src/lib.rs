//! Auditing Rényi differential privacy of prediction-level private learning.
//!
//! The mechanism under audit is the Gaussian noisy argmax over a vote
//! histogram. The crate computes its exact output distribution, the
//! standard theoretical RDP bound, and statistically valid lower bounds
//! from Monte Carlo runs of the mechanism on two neighbouring datasets.

pub mod audit;
pub mod campaign;
pub mod curve;
pub mod error;
pub mod mechanism;
pub mod quadrature;
pub mod rng;
pub mod sampling;
pub mod scenario;
pub mod special;
pub mod stats;
pub mod theory;

pub use audit::{AuditMethod, AuditResult, OutcomeTally, OutputSet, Validity};
pub use curve::{compose_curves, default_orders, rdp_to_dp, DpPoint, RdpCurve, DEFAULT_ORDERS};
pub use error::{Error, Result};
pub use mechanism::{
    class_probabilities, noisy_argmax_sample, renyi_divergence_exact, ClassDistribution, Histogram,
    MechanismParams, NoisyArgmax,
};
pub use theory::{gaussian_rdp_bound, generic_group_rdp, VOTE_SWAP_SENSITIVITY};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/mechanism.md")]
    mod mechanism {}
    #[doc = include_str!("../../../book/src/theory.md")]
    mod theory {}
    #[doc = include_str!("../../../book/src/auditing.md")]
    mod auditing {}
    #[doc = include_str!("../../../book/src/intervals.md")]
    mod intervals {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
    #[doc = include_str!("../../../book/src/campaigns.md")]
    mod campaigns {}
}
