//! Statistically valid RDP lower bounds from Monte Carlo outcome tallies.
//!
//! Every audit consumes an [`OutcomeTally`]: how often each class was
//! returned when the mechanism ran on `S` and on `S′`.
//!
//! | method               | finite-sample valid | attack reading | valid at 0 | all orders at once |
//! |----------------------|:---:|:---:|:---:|:---:|
//! | `two_cut`            | yes | yes | yes | yes |
//! | `k_cut`              | no  | no  | yes | yes |
//! | `two_cut_bootstrap`  | no  | yes | no  | no  |
//! | `k_cut_bootstrap`    | no  | no  | no  | no  |

mod cuts;
mod report;
mod tally;

pub use cuts::{
    approx_dp_audit, bootstrap_audit, epsilon_lower_from_bounds, k_cut_audit, plug_in_k_cut, plug_in_two_cut,
    proportion_bounds, select_output_set, two_cut_audit, two_cut_from_bounds, BootstrapVariant, ProportionBounds,
};
pub use report::{
    audited_dp_report, AuditReport, ComposedAudit, Conversion, ConversionKind, QueryAudit, CSV_HEADER,
};
pub use tally::{OutcomeTally, OutputSet};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::curve::RdpCurve;
use crate::error::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditMethod {
    TwoCut,
    KCut,
    TwoCutBootstrap,
    KCutBootstrap,
}

impl AuditMethod {
    pub const ALL: [AuditMethod; 4] = [
        AuditMethod::TwoCut,
        AuditMethod::KCut,
        AuditMethod::TwoCutBootstrap,
        AuditMethod::KCutBootstrap,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            AuditMethod::TwoCut => "two_cut",
            AuditMethod::KCut => "k_cut",
            AuditMethod::TwoCutBootstrap => "two_cut_bootstrap",
            AuditMethod::KCutBootstrap => "k_cut_bootstrap",
        }
    }
}

impl fmt::Display for AuditMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AuditMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        AuditMethod::ALL
            .into_iter()
            .find(|m| m.as_str() == s.trim())
            .ok_or_else(|| Error::Config(format!("unknown audit method '{s}'")))
    }
}

/// What kind of guarantee a lower bound at one order carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Validity {
    /// Holds with the stated confidence at every sample size.
    FiniteSample,
    /// Holds only as the number of trials grows.
    Asymptotic,
    /// The bootstrap reliability rule failed; do not read as a bound.
    Unreliable,
}

impl Validity {
    pub fn is_always_valid(self) -> bool {
        self == Validity::FiniteSample
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditResult {
    pub method: AuditMethod,
    /// Lower bounds on `D_α(M(S) ‖ M(S′))`, clipped at zero.
    pub curve: RdpCurve,
    /// Probability that every bound in `curve` holds simultaneously.
    pub confidence: f64,
    /// Output set of the 2-cut variants.
    pub output_set: Option<OutputSet>,
    pub validity: Vec<Validity>,
    pub trials_s: u64,
    pub trials_s_prime: u64,
}
