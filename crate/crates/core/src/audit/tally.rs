use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Output counts of the mechanism on `S` and on `S′`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeTally {
    pub counts_s: Vec<u64>,
    pub counts_s_prime: Vec<u64>,
}

impl OutcomeTally {
    pub fn new(num_classes: usize) -> Self {
        OutcomeTally {
            counts_s: vec![0; num_classes],
            counts_s_prime: vec![0; num_classes],
        }
    }

    pub fn from_counts(counts_s: Vec<u64>, counts_s_prime: Vec<u64>) -> Result<Self> {
        if counts_s.len() != counts_s_prime.len() || counts_s.len() < 2 {
            return Err(Error::InvalidParameter(format!(
                "tally sides need equal class counts >= 2, got {} and {}",
                counts_s.len(),
                counts_s_prime.len()
            )));
        }
        Ok(OutcomeTally { counts_s, counts_s_prime })
    }

    pub fn from_outcomes(num_classes: usize, outcomes_s: &[usize], outcomes_s_prime: &[usize]) -> Self {
        let mut t = OutcomeTally::new(num_classes);
        for &o in outcomes_s {
            t.counts_s[o] += 1;
        }
        for &o in outcomes_s_prime {
            t.counts_s_prime[o] += 1;
        }
        t
    }

    pub fn num_classes(&self) -> usize {
        self.counts_s.len()
    }

    #[inline]
    pub fn record(&mut self, outcome_s: usize, outcome_s_prime: usize) {
        self.counts_s[outcome_s] += 1;
        self.counts_s_prime[outcome_s_prime] += 1;
    }

    pub fn merge(&mut self, other: &OutcomeTally) {
        for (a, b) in self.counts_s.iter_mut().zip(&other.counts_s) {
            *a += b;
        }
        for (a, b) in self.counts_s_prime.iter_mut().zip(&other.counts_s_prime) {
            *a += b;
        }
    }

    pub fn trials_s(&self) -> u64 {
        self.counts_s.iter().sum()
    }

    pub fn trials_s_prime(&self) -> u64 {
        self.counts_s_prime.iter().sum()
    }

    pub(crate) fn check_nonempty(&self) -> Result<()> {
        if self.trials_s() == 0 || self.trials_s_prime() == 0 {
            return Err(Error::DegenerateTally);
        }
        Ok(())
    }
}

/// A nonempty proper subset of the classes, sorted and deduplicated.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OutputSet(Vec<usize>);

impl OutputSet {
    pub fn new(mut classes: Vec<usize>, num_classes: usize) -> Result<Self> {
        classes.sort_unstable();
        classes.dedup();
        if classes.is_empty() || classes.len() >= num_classes {
            return Err(Error::EmptySet);
        }
        if let Some(&bad) = classes.iter().find(|&&c| c >= num_classes) {
            return Err(Error::InvalidParameter(format!(
                "class {bad} outside 0..{num_classes}"
            )));
        }
        Ok(OutputSet(classes))
    }

    pub fn singleton(class: usize, num_classes: usize) -> Result<Self> {
        OutputSet::new(vec![class], num_classes)
    }

    pub fn complement(&self, num_classes: usize) -> Result<Self> {
        OutputSet::new((0..num_classes).filter(|c| !self.0.contains(c)).collect(), num_classes)
    }

    pub fn classes(&self) -> &[usize] {
        &self.0
    }

    /// Total count over the set.
    pub fn mass(&self, counts: &[u64]) -> u64 {
        self.0.iter().map(|&c| counts[c]).sum()
    }
}
