//! Confidence machinery behind the audits: exact binomial intervals,
//! simultaneous multinomial intervals and percentile bootstrap bounds.

mod binomial;
mod bootstrap;
mod multinomial;

pub use binomial::{clopper_pearson, clopper_pearson_lower, clopper_pearson_upper, BinomialBounds};
pub use bootstrap::{
    bootstrap_counts_lower, bootstrap_percentile_lower, bootstrap_percentile_lower_multi, lower_percentile,
    reliability_threshold, BootstrapBound,
};
pub use multinomial::{simultaneous_bounds, MultinomialBounds, SimultaneousMethod};

use crate::error::{Error, Result};

pub(crate) fn check_confidence(confidence: f64) -> Result<()> {
    if confidence > 0.0 && confidence < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("confidence must lie in (0, 1), got {confidence}")))
    }
}
