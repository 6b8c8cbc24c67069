//! Audit campaigns: simulate every audited query of a fixture, run the
//! configured audits, and write the report.

mod checkpoint;
mod simulate;

pub use checkpoint::CHECKPOINT_DIR;
pub use simulate::{simulate_query, QueryTallies, CHUNK_TRIALS};

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::audit::{
    audited_dp_report, bootstrap_audit, k_cut_audit, select_output_set, two_cut_audit, AuditMethod, AuditReport,
    BootstrapVariant, QueryAudit,
};
use crate::curve::{default_orders, validate_orders};
use crate::error::{Error, Result};
use crate::mechanism::renyi_divergence_exact;
use crate::rng::derive_seed;
use crate::scenario::{Coupling, Fixture, Scenario, VoteModel};
use crate::stats::SimultaneousMethod;
use crate::theory::{gaussian_rdp_bound, VOTE_SWAP_SENSITIVITY};

pub const MIN_TRIALS: u64 = 10_000;
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignConfig {
    pub fixture: PathBuf,
    /// Trial pairs per audited query, pilot included.
    pub trials: u64,
    pub orders: Vec<f64>,
    /// Overall confidence of the composed audit.
    pub confidence: f64,
    pub delta: f64,
    pub methods: Vec<AuditMethod>,
    /// Fraction of trials used to pick the 2-cut output set.
    pub split: f64,
    pub seed: u64,
    pub workers: usize,
    pub out: PathBuf,
    pub bootstrap_resamples: usize,
    pub coupling: Coupling,
    pub simultaneous: SimultaneousMethod,
    /// Trials between checkpoints.
    pub checkpoint_interval: u64,
}

impl CampaignConfig {
    pub fn new(fixture: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        CampaignConfig {
            fixture: fixture.into(),
            trials: 10_000_000,
            orders: default_orders(),
            confidence: 0.95,
            delta: 1e-6,
            methods: vec![AuditMethod::TwoCut],
            split: 0.1,
            seed: 0,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            out: out.into(),
            bootstrap_resamples: 1000,
            coupling: Coupling::Independent,
            simultaneous: SimultaneousMethod::Goodman,
            checkpoint_interval: 10_000_000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.trials < MIN_TRIALS {
            return bad(format!("trials must be at least {MIN_TRIALS}, got {}", self.trials));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad(format!("delta must lie in (0, 1), got {}", self.delta));
        }
        if !(self.split > 0.0 && self.split <= 0.5) {
            return bad(format!("split must lie in (0, 0.5], got {}", self.split));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return bad(format!("confidence must lie in (0, 1), got {}", self.confidence));
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if self.methods.is_empty() {
            return bad("no audit methods selected".into());
        }
        if self.checkpoint_interval == 0 {
            return bad("checkpoint interval must be positive".into());
        }
        validate_orders(&self.orders).map_err(|e| Error::Config(e.to_string()))
    }

    /// Trials reserved for output-set selection.
    pub fn pilot_trials(&self) -> u64 {
        ((self.split * self.trials as f64).ceil() as u64).clamp(1, self.trials - 1)
    }
}

/// Settings echoed into the JSON report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignSettings {
    pub variant: String,
    pub sigma: f64,
    pub trials: u64,
    pub pilot_trials: u64,
    pub seed: u64,
    pub coupling: Coupling,
    pub crafter: crate::scenario::Crafter,
    pub distinguisher: crate::scenario::Distinguisher,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub settings: CampaignSettings,
    #[serde(flatten)]
    pub report: AuditReport,
}

#[derive(Clone, Debug)]
pub struct CampaignOutcome {
    pub report: CampaignReport,
    pub json_path: PathBuf,
    pub csv_path: PathBuf,
}

/// Process exit code for a failed campaign.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => 2,
        Error::Fixture(_) => 3,
        Error::QuadratureFailure { .. } | Error::NormalizationFailure { .. } => 4,
        Error::Io(_) => 5,
        _ => 1,
    }
}

fn notes_for(model: &VoteModel) -> Vec<String> {
    match model {
        VoteModel::PromptPate { .. } => vec![],
        VoteModel::PrivateKnn { .. } => vec![
            "exact divergence not reported: histograms are random".into(),
            "knn removal repair: the displaced vote is drawn from p_last restricted to nonzero bins, \
             or from the bin counts when that leaves no mass"
                .into(),
        ],
        _ => vec!["exact divergence not reported: histograms are random".into()],
    }
}

/// Simulates and audits one query. Confidence is the per-query share.
fn audit_query(
    scenario: &Scenario,
    index: usize,
    config: &CampaignConfig,
    confidence: f64,
    checkpoint_dir: Option<&Path>,
) -> Result<QueryAudit> {
    let query = &scenario.queries[index];
    let query_seed = derive_seed(config.seed, index as u64);
    let tallies = simulate_query(&query.model, scenario.sigma, config, query_seed, checkpoint_dir)?;
    let merged = {
        let mut t = tallies.pilot.clone();
        t.merge(&tallies.audit);
        t
    };
    let orders = &config.orders;
    let output_set = select_output_set(&tallies.pilot, orders)?;
    let bootstrap_seed = derive_seed(query_seed, 3);
    let mut audits = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let result = match method {
            AuditMethod::TwoCut => two_cut_audit(&tallies.audit, &output_set, orders, confidence)?,
            AuditMethod::KCut => k_cut_audit(&merged, orders, confidence, config.simultaneous)?,
            AuditMethod::TwoCutBootstrap => bootstrap_audit(
                &tallies.audit,
                &BootstrapVariant::TwoCut(output_set.clone()),
                orders,
                confidence,
                config.bootstrap_resamples,
                bootstrap_seed,
            )?,
            AuditMethod::KCutBootstrap => bootstrap_audit(
                &merged,
                &BootstrapVariant::KCut,
                orders,
                confidence,
                config.bootstrap_resamples,
                bootstrap_seed,
            )?,
        };
        audits.push(result);
    }
    let exact = match &query.model {
        VoteModel::PromptPate { h_s, h_s_prime } => Some(renyi_divergence_exact(h_s, h_s_prime, scenario.sigma, orders)?),
        _ => None,
    };
    Ok(QueryAudit {
        query_id: query.id.clone(),
        audits,
        exact,
        theory: gaussian_rdp_bound(scenario.sigma, VOTE_SWAP_SENSITIVITY, orders)?,
        notes: notes_for(&query.model),
    })
}

/// Runs a campaign on an already validated scenario. Checkpoints go to
/// `checkpoint_dir` when given.
pub fn audit_scenario(scenario: &Scenario, config: &CampaignConfig, checkpoint_dir: Option<&Path>) -> Result<CampaignReport> {
    config.validate()?;
    let ids = &scenario.adversary.query_ids;
    let per_query_confidence = 1.0 - (1.0 - config.confidence) / ids.len() as f64;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let queries = pool.install(|| {
        ids.iter()
            .map(|id| {
                let index = scenario.queries.iter().position(|q| &q.id == id).expect("validated");
                audit_query(scenario, index, config, per_query_confidence, checkpoint_dir)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let report = audited_dp_report(queries, scenario.adversary.repetitions, config.delta)?;
    Ok(CampaignReport {
        settings: CampaignSettings {
            variant: scenario.variant.as_str().into(),
            sigma: scenario.sigma,
            trials: config.trials,
            pilot_trials: config.pilot_trials(),
            seed: config.seed,
            coupling: config.coupling,
            crafter: scenario.adversary.crafter,
            distinguisher: scenario.adversary.distinguisher,
        },
        report,
    })
}

/// Loads the fixture, runs the campaign and writes `report.json` and
/// `report.csv` into the output directory.
pub fn run_campaign(config: &CampaignConfig) -> Result<CampaignOutcome> {
    config.validate()?;
    let scenario = Fixture::load(&config.fixture)?.validate()?;
    std::fs::create_dir_all(&config.out)?;
    let checkpoint_dir = config.out.join(CHECKPOINT_DIR);
    let report = audit_scenario(&scenario, config, Some(&checkpoint_dir))?;
    let json_path = config.out.join(REPORT_JSON);
    let csv_path = config.out.join(REPORT_CSV);
    std::fs::write(&json_path, serde_json::to_string_pretty(&report)?)?;
    std::fs::write(&csv_path, report.report.to_csv())?;
    checkpoint::clear(&checkpoint_dir)?;
    Ok(CampaignOutcome { report, json_path, csv_path })
}

/// Validates a fixture file and returns one summary line per query plus one
/// for the adversary.
pub fn verify_fixture(path: &Path) -> Result<Vec<String>> {
    let scenario = Fixture::load(path)?.validate()?;
    let mut lines: Vec<String> = scenario
        .queries
        .iter()
        .map(|q| {
            format!(
                "query {}: variant={} classes={} teachers={} sigma={}",
                q.id,
                q.model.variant_name(),
                q.model.num_classes(),
                q.model.num_teachers(),
                scenario.sigma
            )
        })
        .collect();
    let adv = &scenario.adversary;
    let name = |v: serde_json::Value| v.as_str().unwrap_or_default().to_string();
    lines.push(format!(
        "adversary: crafter={} distinguisher={} queries=[{}] repetitions={}",
        name(serde_json::to_value(adv.crafter)?),
        name(serde_json::to_value(adv.distinguisher)?),
        adv.query_ids.join(", "),
        adv.repetitions
    ));
    Ok(lines)
}
