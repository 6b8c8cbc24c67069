use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Read;

use super::fixture::{AdversaryConfig, Crafter, Distinguisher, Fixture, QuerySpec, Variant, DEFAULT_REPETITIONS};
use super::Categorical;
use crate::error::{Error, Result};

/// One row of a prediction dump: what `teacher_id` predicted for
/// `query_id` in training run `run_id`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub query_id: String,
    pub run_id: u64,
    pub teacher_id: u64,
    pub predicted_class: usize,
}

/// Maximum-likelihood categorical: the empirical class frequencies, with
/// no smoothing.
pub fn estimate_vote_distribution(samples: &[usize], num_classes: usize) -> Result<Categorical> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("no prediction samples".into()));
    }
    let mut counts = vec![0u64; num_classes];
    for &s in samples {
        *counts
            .get_mut(s)
            .ok_or_else(|| Error::InvalidParameter(format!("class {s} outside 0..{num_classes}")))? += 1;
    }
    let n = samples.len() as f64;
    Categorical::new(counts.into_iter().map(|c| c as f64 / n).collect())
}

/// Reads a CSV dump with header `query_id,run_id,teacher_id,predicted_class`.
pub fn read_prediction_dump<R: Read>(reader: R) -> Result<Vec<PredictionRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    rdr.deserialize()
        .enumerate()
        .map(|(i, row)| row.map_err(|e| Error::Config(format!("prediction dump row {}: {e}", i + 1))))
        .collect()
}

/// Predictions grouped by query (in order of first appearance) and teacher.
fn group(records: &[PredictionRecord]) -> Vec<(String, BTreeMap<u64, Vec<usize>>)> {
    let mut out: Vec<(String, BTreeMap<u64, Vec<usize>>)> = Vec::new();
    for r in records {
        let idx = match out.iter().position(|(q, _)| *q == r.query_id) {
            Some(i) => i,
            None => {
                out.push((r.query_id.clone(), BTreeMap::new()));
                out.len() - 1
            }
        };
        out[idx].1.entry(r.teacher_id).or_default().push(r.predicted_class);
    }
    out
}

fn all_votes(teachers: &BTreeMap<u64, Vec<usize>>) -> Vec<usize> {
    teachers.values().flatten().copied().collect()
}

/// Builds a PATE or CaPC fixture from prediction dumps of models trained on
/// `S` and on `S′`.
///
/// PATE: `P` is fitted to every prediction on `S`, `P′` to every prediction
/// on `S′`. CaPC: one distribution per teacher on `S` (teacher 1 is the
/// smallest id), and `P¹′` from the `S′` dump. The adversary asks every
/// query once.
pub fn fixture_from_dumps(
    variant: Variant,
    dump_s: &[PredictionRecord],
    dump_s_prime: &[PredictionRecord],
    num_classes: Option<usize>,
    sigma: f64,
) -> Result<Fixture> {
    if !matches!(variant, Variant::Pate | Variant::Capc) {
        return Err(Error::Config(format!("cannot estimate a {} fixture from dumps", variant.as_str())));
    }
    if dump_s.is_empty() || dump_s_prime.is_empty() {
        return Err(Error::Config("prediction dumps must not be empty".into()));
    }
    let num_classes = num_classes.unwrap_or_else(|| {
        let max = dump_s.iter().chain(dump_s_prime).map(|r| r.predicted_class).max().unwrap_or(0);
        (max + 1).max(2)
    });
    let grouped_s = group(dump_s);
    let grouped_sp = group(dump_s_prime);
    let teachers = grouped_s[0].1.len();
    let mut queries = Vec::with_capacity(grouped_s.len());
    for (id, by_teacher) in &grouped_s {
        let prime = grouped_sp
            .iter()
            .find(|(q, _)| q == id)
            .map(|(_, t)| all_votes(t))
            .ok_or_else(|| Error::Config(format!("query '{id}' missing from the S′ dump")))?;
        let prime = estimate_vote_distribution(&prime, num_classes)?;
        let mut spec = QuerySpec { id: id.clone(), ..Default::default() };
        match variant {
            Variant::Pate => {
                spec.p = Some(estimate_vote_distribution(&all_votes(by_teacher), num_classes)?.into());
                spec.p_prime = Some(prime.into());
            }
            _ => {
                if by_teacher.len() != teachers {
                    return Err(Error::Config(format!(
                        "query '{id}' has predictions from {} teachers, expected {teachers}",
                        by_teacher.len()
                    )));
                }
                spec.teacher_probs = Some(
                    by_teacher
                        .values()
                        .map(|v| estimate_vote_distribution(v, num_classes).map(Into::into))
                        .collect::<Result<Vec<_>>>()?,
                );
                spec.teacher1_prime = Some(prime.into());
            }
        }
        queries.push(spec);
    }
    let query_ids = queries.iter().map(|q| q.id.clone()).collect();
    Ok(Fixture {
        variant,
        num_classes,
        teachers: teachers as u32,
        sigma,
        gamma: None,
        queries,
        adversary: AdversaryConfig {
            crafter: Crafter::Poisoning,
            distinguisher: Distinguisher::Natural,
            query_ids,
            repetitions: DEFAULT_REPETITIONS,
        },
    })
}
