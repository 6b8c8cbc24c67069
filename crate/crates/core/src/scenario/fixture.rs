use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::path::Path;

use super::{Categorical, VoteModel};
use crate::error::{Error, Result};
use crate::mechanism::Histogram;

pub const DEFAULT_REPETITIONS: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Pate,
    Capc,
    PromptPate,
    PrivateKnn,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Pate => "pate",
            Variant::Capc => "capc",
            Variant::PromptPate => "prompt_pate",
            Variant::PrivateKnn => "private_knn",
        }
    }
}

/// Who builds the neighbouring dataset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Crafter {
    /// `S′` adds an ordinary data point.
    Natural,
    /// `S′` adds a point crafted to flip votes.
    Poisoning,
}

/// Who chooses the queries.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distinguisher {
    /// One crafted query asked `repetitions` times.
    Adversarial,
    /// A list of ordinary queries, each asked once.
    Natural,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdversaryConfig {
    pub crafter: Crafter,
    pub distinguisher: Distinguisher,
    pub query_ids: Vec<String>,
    /// How many times the query list is asked; composition multiplies the
    /// per-query curves by this.
    #[serde(default = "default_repetitions")]
    pub repetitions: u32,
}

fn default_repetitions() -> u32 {
    DEFAULT_REPETITIONS
}

/// One query as written in a fixture file. Which fields are required
/// depends on the fixture's variant.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QuerySpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_prime: Option<Vec<f64>>,
    /// CaPC: one distribution per teacher.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub teacher_probs: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub teacher1_prime: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_s: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_s_prime: Option<Vec<u32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_last: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub poison_label: Option<usize>,
}

/// The on-disk scenario description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub variant: Variant,
    pub num_classes: usize,
    pub teachers: u32,
    pub sigma: f64,
    /// Subsampling rate; private kNN only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    pub queries: Vec<QuerySpec>,
    pub adversary: AdversaryConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioQuery {
    pub id: String,
    pub model: VoteModel,
}

/// A fixture whose invariants have been checked.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub variant: Variant,
    pub num_classes: usize,
    pub teachers: u32,
    pub sigma: f64,
    pub queries: Vec<ScenarioQuery>,
    pub adversary: AdversaryConfig,
}

impl Scenario {
    pub fn query(&self, id: &str) -> Option<&ScenarioQuery> {
        self.queries.iter().find(|q| q.id == id)
    }

    /// The queries the adversary asks, in its order.
    pub fn audited_queries(&self) -> Vec<&ScenarioQuery> {
        self.adversary
            .query_ids
            .iter()
            .map(|id| self.query(id).expect("validated"))
            .collect()
    }
}

fn fixture_err<T>(msg: String) -> Result<T> {
    Err(Error::Fixture(msg))
}

fn required<'a, T>(value: &'a Option<T>, query: &str, field: &str) -> Result<&'a T> {
    value
        .as_ref()
        .ok_or_else(|| Error::Fixture(format!("query '{query}': missing field '{field}'")))
}

fn categorical(values: &[f64], query: &str, field: &str) -> Result<Categorical> {
    Categorical::new(values.to_vec()).map_err(|e| Error::Fixture(format!("query '{query}': {field}: {e}")))
}

fn histogram(values: &[u32], query: &str, field: &str) -> Result<Histogram> {
    Histogram::new(values.to_vec()).map_err(|e| Error::Fixture(format!("query '{query}': {field}: {e}")))
}

impl Fixture {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Fixture(format!("cannot parse fixture: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Fixture::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn model_for(&self, q: &QuerySpec) -> Result<VoteModel> {
        let id = q.id.as_str();
        let model = match self.variant {
            Variant::Pate => VoteModel::Pate {
                p: categorical(required(&q.p, id, "p")?, id, "p")?,
                p_prime: categorical(required(&q.p_prime, id, "p_prime")?, id, "p_prime")?,
                teachers: self.teachers,
            },
            Variant::Capc => {
                let probs = required(&q.teacher_probs, id, "teacher_probs")?;
                if probs.len() != self.teachers as usize {
                    return fixture_err(format!(
                        "query '{id}': teacher_probs lists {} teachers, fixture has {}",
                        probs.len(),
                        self.teachers
                    ));
                }
                let teachers = probs
                    .iter()
                    .enumerate()
                    .map(|(i, p)| categorical(p, id, &format!("teacher_probs[{i}]")))
                    .collect::<Result<Vec<_>>>()?;
                VoteModel::Capc {
                    teachers,
                    teacher1_prime: categorical(required(&q.teacher1_prime, id, "teacher1_prime")?, id, "teacher1_prime")?,
                }
            }
            Variant::PromptPate => {
                let h_s = histogram(required(&q.h_s, id, "h_s")?, id, "h_s")?;
                let h_s_prime = histogram(required(&q.h_s_prime, id, "h_s_prime")?, id, "h_s_prime")?;
                if h_s.total() != self.teachers as u64 {
                    return fixture_err(format!(
                        "query '{id}': h_s sums to {}, fixture has {} teachers",
                        h_s.total(),
                        self.teachers
                    ));
                }
                VoteModel::PromptPate { h_s, h_s_prime }
            }
            Variant::PrivateKnn => VoteModel::PrivateKnn {
                p: categorical(required(&q.p, id, "p")?, id, "p")?,
                p_last: categorical(required(&q.p_last, id, "p_last")?, id, "p_last")?,
                teachers: self.teachers,
                gamma: self
                    .gamma
                    .ok_or_else(|| Error::Fixture("private_knn fixture needs 'gamma'".into()))?,
                rank: *required(&q.rank, id, "rank")?,
                poison_label: *required(&q.poison_label, id, "poison_label")?,
            },
        };
        if model.num_classes() != self.num_classes {
            return fixture_err(format!(
                "query '{id}': {} classes, fixture declares {}",
                model.num_classes(),
                self.num_classes
            ));
        }
        model.validate().map_err(|e| match e {
            Error::Fixture(m) => Error::Fixture(format!("query '{id}': {m}")),
            other => other,
        })?;
        Ok(model)
    }

    /// Checks every invariant and builds the typed scenario. The error
    /// names the first violation found.
    pub fn validate(&self) -> Result<Scenario> {
        if self.num_classes < 2 {
            return fixture_err(format!("num_classes must be at least 2, got {}", self.num_classes));
        }
        if self.teachers == 0 {
            return fixture_err("teachers must be at least 1".into());
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return fixture_err(format!("sigma must be positive and finite, got {}", self.sigma));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g < 1.0) {
                return fixture_err(format!("gamma must lie in (0, 1), got {g}"));
            }
        }
        if self.queries.is_empty() {
            return fixture_err("fixture has no queries".into());
        }
        let mut seen = HashSet::new();
        let mut queries = Vec::with_capacity(self.queries.len());
        for q in &self.queries {
            if !seen.insert(q.id.as_str()) {
                return fixture_err(format!("duplicate query id '{}'", q.id));
            }
            queries.push(ScenarioQuery { id: q.id.clone(), model: self.model_for(q)? });
        }
        let adv = &self.adversary;
        if adv.query_ids.is_empty() {
            return fixture_err("adversary.query_ids is empty".into());
        }
        if adv.distinguisher == Distinguisher::Adversarial && adv.query_ids.len() != 1 {
            return fixture_err(format!(
                "adversarial distinguisher repeats a single query, got {} query ids",
                adv.query_ids.len()
            ));
        }
        if adv.repetitions == 0 {
            return fixture_err("adversary.repetitions must be at least 1".into());
        }
        let mut used = HashSet::new();
        for id in &adv.query_ids {
            if !seen.contains(id.as_str()) {
                return fixture_err(format!("adversary references unknown query '{id}'"));
            }
            if !used.insert(id.as_str()) {
                return fixture_err(format!("adversary lists query '{id}' twice"));
            }
        }
        Ok(Scenario {
            variant: self.variant,
            num_classes: self.num_classes,
            teachers: self.teachers,
            sigma: self.sigma,
            queries,
            adversary: adv.clone(),
        })
    }
}
