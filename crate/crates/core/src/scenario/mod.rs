//! Vote-histogram models for the four prediction-level learning systems and
//! paired samplers for the neighbouring datasets `S` and `S′`.
//!
//! `S′` always differs from `S` in one training point, which moves at most
//! one teacher vote. The models differ in how the rest of the histogram is
//! generated:
//!
//! * PATE: `k` iid teachers with vote distribution `P`; under `S′` one of
//!   them votes from `P′`.
//! * CaPC: teachers with individual distributions; teacher 1 changes.
//! * PromptPATE: a fixed pair of histograms.
//! * Private kNN: the `k` nearest subsampled neighbours vote; a poison
//!   point at rank `r` enters the neighbour set with probability `ν`.

mod estimate;
mod fixture;
pub mod knn;
mod sampler;

pub use estimate::{estimate_vote_distribution, fixture_from_dumps, read_prediction_dump, PredictionRecord};
pub use fixture::{
    AdversaryConfig, Crafter, Distinguisher, Fixture, QuerySpec, Scenario, ScenarioQuery, Variant, DEFAULT_REPETITIONS,
};
pub use knn::{knn_expected_influence, knn_inclusion_probability};
pub use sampler::{
    prompt_pate_pair, sample_capc_pair, sample_knn_pair, sample_pate_pair, Coupling, PairSampler,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanism::Histogram;

/// Tolerance on `Σ p = 1` for a categorical distribution.
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-9;

/// A probability vector over classes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Categorical(Vec<f64>);

impl Categorical {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidParameter("categorical has no classes".into()));
        }
        if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !(p.is_finite() && **p >= 0.0)) {
            return Err(Error::InvalidParameter(format!("probability {i} is {p}")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
            return Err(Error::InvalidParameter(format!("probabilities sum to {sum}")));
        }
        Ok(Categorical(probs))
    }

    pub fn uniform(num_classes: usize) -> Self {
        Categorical(vec![1.0 / num_classes as f64; num_classes])
    }

    /// All mass on `class`.
    pub fn point(class: usize, num_classes: usize) -> Self {
        let mut p = vec![0.0; num_classes];
        p[class] = 1.0;
        Categorical(p)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn num_classes(&self) -> usize {
        self.0.len()
    }
}

impl TryFrom<Vec<f64>> for Categorical {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Categorical::new(v)
    }
}

impl From<Categorical> for Vec<f64> {
    fn from(c: Categorical) -> Self {
        c.0
    }
}

/// How the teacher votes behind one query are generated.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum VoteModel {
    Pate {
        p: Categorical,
        p_prime: Categorical,
        teachers: u32,
    },
    Capc {
        /// One distribution per teacher; index 0 is the teacher whose data
        /// changes.
        teachers: Vec<Categorical>,
        teacher1_prime: Categorical,
    },
    PromptPate {
        h_s: Histogram,
        h_s_prime: Histogram,
    },
    PrivateKnn {
        /// Vote distribution of a clean neighbour.
        p: Categorical,
        /// Distribution of the label of the `k`-th nearest clean neighbour.
        p_last: Categorical,
        teachers: u32,
        gamma: f64,
        /// 1-based rank of the poison point among all candidates.
        rank: u64,
        poison_label: usize,
    },
}

impl VoteModel {
    pub fn variant_name(&self) -> &'static str {
        match self {
            VoteModel::Pate { .. } => "pate",
            VoteModel::Capc { .. } => "capc",
            VoteModel::PromptPate { .. } => "prompt_pate",
            VoteModel::PrivateKnn { .. } => "private_knn",
        }
    }

    pub fn num_classes(&self) -> usize {
        match self {
            VoteModel::Pate { p, .. } | VoteModel::PrivateKnn { p, .. } => p.num_classes(),
            VoteModel::Capc { teacher1_prime, .. } => teacher1_prime.num_classes(),
            VoteModel::PromptPate { h_s, .. } => h_s.num_classes(),
        }
    }

    /// Number of votes in every histogram the model produces.
    pub fn num_teachers(&self) -> u64 {
        match self {
            VoteModel::Pate { teachers, .. } | VoteModel::PrivateKnn { teachers, .. } => *teachers as u64,
            VoteModel::Capc { teachers, .. } => teachers.len() as u64,
            VoteModel::PromptPate { h_s, .. } => h_s.total(),
        }
    }

    /// Checks the model's invariants and names the first one violated.
    pub fn validate(&self) -> Result<()> {
        let k = self.num_classes();
        let fail = |msg: String| Err(Error::Fixture(msg));
        let same_k = |name: &str, c: &Categorical| -> Result<()> {
            if c.num_classes() != k {
                return Err(Error::Fixture(format!("{name} has {} classes, expected {k}", c.num_classes())));
            }
            Ok(())
        };
        if k < 2 {
            return fail(format!("need at least 2 classes, got {k}"));
        }
        match self {
            VoteModel::Pate { p, p_prime, teachers } => {
                same_k("p", p)?;
                same_k("p_prime", p_prime)?;
                if *teachers == 0 {
                    return fail("teachers must be at least 1".into());
                }
            }
            VoteModel::Capc { teachers, teacher1_prime } => {
                if teachers.is_empty() {
                    return fail("capc needs at least one teacher".into());
                }
                for (i, t) in teachers.iter().enumerate() {
                    same_k(&format!("teacher {i}"), t)?;
                }
                same_k("teacher1_prime", teacher1_prime)?;
            }
            VoteModel::PromptPate { h_s, h_s_prime } => {
                if h_s.num_classes() != h_s_prime.num_classes() {
                    return fail(format!(
                        "h_s has {} classes, h_s_prime has {}",
                        h_s.num_classes(),
                        h_s_prime.num_classes()
                    ));
                }
                if h_s.total() != h_s_prime.total() {
                    return fail(format!("h_s sums to {}, h_s_prime to {}", h_s.total(), h_s_prime.total()));
                }
                let moved: u64 = h_s
                    .counts()
                    .iter()
                    .zip(h_s_prime.counts())
                    .map(|(&a, &b)| (a as i64 - b as i64).unsigned_abs())
                    .sum();
                if moved > 2 {
                    return fail(format!("h_s and h_s_prime differ by more than one vote ({moved} cells moved)"));
                }
            }
            VoteModel::PrivateKnn { p, p_last, teachers, gamma, rank, poison_label } => {
                same_k("p", p)?;
                same_k("p_last", p_last)?;
                if *teachers == 0 {
                    return fail("teachers must be at least 1".into());
                }
                if !(*gamma > 0.0 && *gamma < 1.0) {
                    return fail(format!("gamma must lie in (0, 1), got {gamma}"));
                }
                if *rank == 0 {
                    return fail("rank is 1-based and must be at least 1".into());
                }
                if *poison_label >= k {
                    return fail(format!("poison_label {poison_label} outside 0..{k}"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn categorical_checks() {
        assert!(Categorical::new(vec![0.5, 0.5]).is_ok());
        assert!(Categorical::new(vec![0.5, 0.4]).is_err());
        assert!(Categorical::new(vec![1.5, -0.5]).is_err());
        assert!(Categorical::new(vec![]).is_err());
        assert!(serde_json::from_str::<Categorical>("[0.2, 0.2]").is_err());
        assert_eq!(Categorical::point(1, 3).probs(), &[0.0, 1.0, 0.0]);
    }

    #[test]
    fn knn_gamma_is_checked() {
        let m = VoteModel::PrivateKnn {
            p: Categorical::uniform(2),
            p_last: Categorical::uniform(2),
            teachers: 3,
            gamma: 1.2,
            rank: 4,
            poison_label: 1,
        };
        let err = m.validate().unwrap_err().to_string();
        assert!(err.contains("gamma"), "{err}");
    }

    #[test]
    fn prompt_pate_pair_must_be_neighbours() {
        let m = VoteModel::PromptPate {
            h_s: Histogram::new(vec![5, 5]).unwrap(),
            h_s_prime: Histogram::new(vec![3, 7]).unwrap(),
        };
        assert!(m.validate().is_err());
        let m = VoteModel::PromptPate {
            h_s: Histogram::new(vec![5, 5]).unwrap(),
            h_s_prime: Histogram::new(vec![4, 6]).unwrap(),
        };
        assert!(m.validate().is_ok());
    }
}
