use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

use super::{checkpoint, CampaignConfig};
use crate::audit::OutcomeTally;
use crate::error::Result;
use crate::mechanism::{MechanismParams, NoisyArgmax};
use crate::rng::derive_seed;
use crate::scenario::{PairSampler, VoteModel};

/// Trials handled by one parallel task. Fixed so that the split of work
/// does not depend on the worker count.
pub const CHUNK_TRIALS: u64 = 1 << 16;

/// Outcome tallies of one query, split into the selection pilot and the
/// audit proper.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryTallies {
    pub pilot: OutcomeTally,
    pub audit: OutcomeTally,
}

impl QueryTallies {
    fn new(num_classes: usize) -> Self {
        QueryTallies { pilot: OutcomeTally::new(num_classes), audit: OutcomeTally::new(num_classes) }
    }

    fn merge(mut self, other: QueryTallies) -> Self {
        self.pilot.merge(&other.pilot);
        self.audit.merge(&other.audit);
        self
    }
}

fn run_chunk(sampler: &PairSampler, mech: &NoisyArgmax, start: u64, end: u64, pilot_trials: u64) -> QueryTallies {
    let k = sampler.num_classes();
    let mut out = QueryTallies::new(k);
    let mut h_s = vec![0u32; k];
    let mut h_s_prime = vec![0u32; k];
    let fixed = sampler.is_deterministic();
    if fixed {
        sampler.sample_into(0, &mut h_s, &mut h_s_prime);
    }
    for trial in start..end {
        if !fixed {
            sampler.sample_into(trial, &mut h_s, &mut h_s_prime);
        }
        let (a, b) = mech.sample_pair(&h_s, &h_s_prime, trial);
        if trial < pilot_trials {
            out.pilot.record(a, b);
        } else {
            out.audit.record(a, b);
        }
    }
    out
}

/// Runs `config.trials` trial pairs of one query on the current rayon pool.
///
/// Trials below `config.pilot_trials()` go to the pilot tally. Progress is
/// checkpointed every `config.checkpoint_interval` trials when a directory
/// is given, and a matching checkpoint is resumed.
pub fn simulate_query(
    model: &VoteModel,
    sigma: f64,
    config: &CampaignConfig,
    query_seed: u64,
    checkpoint_dir: Option<&Path>,
) -> Result<QueryTallies> {
    let sampler = PairSampler::new(model, derive_seed(query_seed, 1), config.coupling)?;
    let mech = NoisyArgmax::new(MechanismParams { sigma, seed: derive_seed(query_seed, 2) })?;
    let pilot_trials = config.pilot_trials();
    let fingerprint = checkpoint::fingerprint(&format!(
        "{model:?}|{sigma:?}|{query_seed}|{}|{pilot_trials}|{:?}",
        config.trials, config.coupling
    ));
    let (mut completed, mut tallies) = checkpoint_dir
        .and_then(|d| checkpoint::load(d, &fingerprint))
        .unwrap_or_else(|| (0, QueryTallies::new(model.num_classes())));
    if completed > 0 {
        log::info!("resuming at trial {completed} of {}", config.trials);
    }
    while completed < config.trials {
        let end = (completed + config.checkpoint_interval).min(config.trials);
        let chunks: Vec<(u64, u64)> = (completed..end)
            .step_by(CHUNK_TRIALS as usize)
            .map(|a| (a, (a + CHUNK_TRIALS).min(end)))
            .collect();
        let block = chunks
            .into_par_iter()
            .map(|(a, b)| run_chunk(&sampler, &mech, a, b, pilot_trials))
            .reduce(|| QueryTallies::new(model.num_classes()), QueryTallies::merge);
        tallies = tallies.merge(block);
        completed = end;
        log::info!("{completed}/{} trials", config.trials);
        if let (Some(dir), true) = (checkpoint_dir, completed < config.trials) {
            checkpoint::save(dir, &fingerprint, completed, &tallies)?;
        }
    }
    Ok(tallies)
}
