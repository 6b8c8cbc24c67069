use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use predaudit::audit::AuditMethod;
use predaudit::campaign::{exit_code, run_campaign, verify_fixture, CampaignConfig};
use predaudit::curve::{default_orders, rdp_to_dp, RdpCurve};
use predaudit::mechanism::{class_probabilities, renyi_divergence_exact, Histogram};
use predaudit::scenario::{fixture_from_dumps, read_prediction_dump, Coupling, Variant};
use predaudit::stats::SimultaneousMethod;
use predaudit::theory::{gaussian_group_rdp_bound, gaussian_rdp_bound, generic_group_rdp, VOTE_SWAP_SENSITIVITY};
use predaudit::{Error, Result};

/// Audit the Rényi-DP leakage of noisy-argmax private prediction.
#[derive(Parser, Debug)]
#[command(name = "predaudit", version)]
struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true, env = "PREDAUDIT_VERBOSE")]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an audit campaign over a fixture and write report.json and report.csv.
    Audit(AuditArgs),
    /// Exact Rényi divergence between the mechanism's outputs on two histograms.
    Exact(ExactArgs),
    /// Theoretical RDP upper bound of the Gaussian noisy argmax.
    Theory(TheoryArgs),
    /// Convert an RDP curve to an (ε, δ) guarantee.
    Convert(ConvertArgs),
    /// Check a fixture's invariants and summarize its queries.
    Verify(VerifyArgs),
    /// Build a PATE or CaPC fixture from prediction dumps.
    Estimate(EstimateArgs),
}

#[derive(Args, Debug)]
struct AuditArgs {
    #[arg(long, env = "PREDAUDIT_FIXTURE")]
    fixture: PathBuf,
    /// Trial pairs per audited query.
    #[arg(long, env = "PREDAUDIT_TRIALS", default_value_t = 10_000_000)]
    trials: u64,
    /// Comma-separated Rényi orders.
    #[arg(long, env = "PREDAUDIT_ORDERS", value_delimiter = ',')]
    orders: Option<Vec<f64>>,
    /// Overall confidence of the composed audit.
    #[arg(long, env = "PREDAUDIT_CONFIDENCE", default_value_t = 0.95)]
    confidence: f64,
    #[arg(long, env = "PREDAUDIT_DELTA", default_value_t = 1e-6)]
    delta: f64,
    #[arg(long, env = "PREDAUDIT_SEED", default_value_t = 0)]
    seed: u64,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, env = "PREDAUDIT_WORKERS")]
    workers: Option<usize>,
    /// Comma-separated audit methods: two_cut, k_cut, two_cut_bootstrap, k_cut_bootstrap.
    #[arg(long, env = "PREDAUDIT_METHODS", value_delimiter = ',', default_value = "two_cut")]
    methods: Vec<AuditMethod>,
    /// Output directory.
    #[arg(long, env = "PREDAUDIT_OUT", default_value = "predaudit-out")]
    out: PathBuf,
    /// Fraction of trials used to choose the 2-cut output set.
    #[arg(long, env = "PREDAUDIT_SPLIT", default_value_t = 0.1)]
    split: f64,
    /// independent or shared.
    #[arg(long, env = "PREDAUDIT_COUPLING", default_value = "independent")]
    coupling: Coupling,
    #[arg(long, env = "PREDAUDIT_BOOTSTRAP_RESAMPLES", default_value_t = 1000)]
    bootstrap_resamples: usize,
    /// Simultaneous intervals for k_cut: goodman or sison_glaz.
    #[arg(long, env = "PREDAUDIT_SIMULTANEOUS", default_value = "goodman", value_parser = parse_simultaneous)]
    simultaneous: SimultaneousMethod,
    /// Trials between checkpoints.
    #[arg(long, env = "PREDAUDIT_CHECKPOINT_INTERVAL", default_value_t = 10_000_000)]
    checkpoint_interval: u64,
}

#[derive(Args, Debug)]
struct ExactArgs {
    /// Vote counts under S, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    h_s: Vec<u32>,
    /// Vote counts under S′, comma-separated.
    #[arg(long, value_delimiter = ',', required = true)]
    h_s_prime: Vec<u32>,
    #[arg(long, env = "PREDAUDIT_SIGMA")]
    sigma: f64,
    #[arg(long, env = "PREDAUDIT_ORDERS", value_delimiter = ',')]
    orders: Option<Vec<f64>>,
    /// Write JSON here instead of stdout.
    #[arg(long, env = "PREDAUDIT_OUT")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TheoryArgs {
    #[arg(long, env = "PREDAUDIT_SIGMA")]
    sigma: f64,
    /// ℓ2 sensitivity of the histogram; √2 for a moved vote.
    #[arg(long, default_value_t = VOTE_SWAP_SENSITIVITY)]
    sensitivity: f64,
    /// Number of changed data points.
    #[arg(long, default_value_t = 1)]
    group_size: u32,
    #[arg(long, env = "PREDAUDIT_ORDERS", value_delimiter = ',')]
    orders: Option<Vec<f64>>,
    #[arg(long, env = "PREDAUDIT_OUT")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConvertArgs {
    /// JSON file holding an RDP curve `{"orders": [...], "values": [...]}`.
    #[arg(long, conflicts_with = "values")]
    curve: Option<PathBuf>,
    #[arg(long, env = "PREDAUDIT_ORDERS", value_delimiter = ',')]
    orders: Option<Vec<f64>>,
    /// Curve values matching `--orders`.
    #[arg(long, value_delimiter = ',', requires = "orders")]
    values: Option<Vec<f64>>,
    #[arg(long, env = "PREDAUDIT_DELTA", default_value_t = 1e-6)]
    delta: f64,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, env = "PREDAUDIT_FIXTURE")]
    fixture: PathBuf,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    /// pate or capc.
    #[arg(long, value_parser = parse_variant)]
    variant: Variant,
    /// Predictions of models trained on S.
    #[arg(long)]
    dump: PathBuf,
    /// Predictions of models trained on S′.
    #[arg(long)]
    dump_prime: PathBuf,
    #[arg(long, env = "PREDAUDIT_SIGMA")]
    sigma: f64,
    /// Number of classes; inferred from the dumps when omitted.
    #[arg(long)]
    num_classes: Option<usize>,
    /// Fixture output file; stdout when omitted.
    #[arg(long, env = "PREDAUDIT_OUT")]
    out: Option<PathBuf>,
}

fn parse_simultaneous(s: &str) -> std::result::Result<SimultaneousMethod, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| format!("unknown interval method '{s}'"))
}

fn parse_variant(s: &str) -> std::result::Result<Variant, String> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| format!("unknown variant '{s}'"))
}

fn emit(json: String, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, json + "\n")?,
        None => println!("{json}"),
    }
    Ok(())
}

fn audit(args: AuditArgs) -> Result<()> {
    let mut config = CampaignConfig::new(args.fixture, args.out);
    config.trials = args.trials;
    config.orders = args.orders.unwrap_or_else(default_orders);
    config.confidence = args.confidence;
    config.delta = args.delta;
    config.seed = args.seed;
    if let Some(w) = args.workers {
        config.workers = w;
    }
    config.methods = args.methods;
    config.split = args.split;
    config.coupling = args.coupling;
    config.bootstrap_resamples = args.bootstrap_resamples;
    config.simultaneous = args.simultaneous;
    config.checkpoint_interval = args.checkpoint_interval;
    let outcome = run_campaign(&config)?;
    let report = &outcome.report.report;
    println!("composed over {} queries x {} repetitions", report.queries.len(), report.repetitions);
    for c in &report.conversions {
        match c.point {
            Some(p) => println!("  {:<24} eps = {:.6} at delta = {:e} (order {})", c.label, p.epsilon, p.delta, p.source_order),
            None => println!("  {:<24} eps = inf", c.label),
        }
    }
    println!("audit eps values are illustrative; an RDP lower bound does not bound eps from below");
    println!("wrote {} and {}", outcome.json_path.display(), outcome.csv_path.display());
    Ok(())
}

fn exact(args: ExactArgs) -> Result<()> {
    let h_s = Histogram::new(args.h_s)?;
    let h_s_prime = Histogram::new(args.h_s_prime)?;
    let orders = args.orders.unwrap_or_else(default_orders);
    let curve = renyi_divergence_exact(&h_s, &h_s_prime, args.sigma, &orders)?;
    let p = class_probabilities(&h_s, args.sigma)?;
    let q = class_probabilities(&h_s_prime, args.sigma)?;
    let json = serde_json::json!({
        "sigma": args.sigma,
        "probs_s": p.probs,
        "probs_s_prime": q.probs,
        "curve": curve,
    });
    emit(serde_json::to_string_pretty(&json)?, args.out.as_ref())
}

fn theory(args: TheoryArgs) -> Result<()> {
    let orders = args.orders.unwrap_or_else(default_orders);
    let single = gaussian_rdp_bound(args.sigma, args.sensitivity, &orders)?;
    let group = gaussian_group_rdp_bound(args.sigma, args.sensitivity, args.group_size, &orders)?;
    let generic: Vec<serde_json::Value> = single
        .iter()
        .map(|(order, rho)| match generic_group_rdp(order, rho, args.group_size) {
            Ok((reduced, bound)) => serde_json::json!({"order": reduced, "value": bound, "from_order": order}),
            Err(_) => serde_json::json!({"order": null, "value": null, "from_order": order}),
        })
        .collect();
    let json = serde_json::json!({
        "sigma": args.sigma,
        "sensitivity": args.sensitivity,
        "group_size": args.group_size,
        "curve": group,
        "generic_group_conversion": generic,
    });
    emit(serde_json::to_string_pretty(&json)?, args.out.as_ref())
}

fn convert(args: ConvertArgs) -> Result<()> {
    let curve: RdpCurve = match (args.curve, args.orders, args.values) {
        (Some(path), _, _) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
        (None, Some(orders), Some(values)) => RdpCurve::new(orders, values).map_err(|e| Error::Config(e.to_string()))?,
        _ => return Err(Error::Config("give --curve FILE or --orders with --values".into())),
    };
    let point = rdp_to_dp(&curve, args.delta)?;
    println!("{}", serde_json::to_string_pretty(&point)?);
    Ok(())
}

fn verify(args: VerifyArgs) -> ExitCode {
    match verify_fixture(&args.fixture) {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
            println!("fixture is valid");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn estimate(args: EstimateArgs) -> Result<()> {
    let dump = read_prediction_dump(std::fs::File::open(&args.dump)?)?;
    let dump_prime = read_prediction_dump(std::fs::File::open(&args.dump_prime)?)?;
    let fixture = fixture_from_dumps(args.variant, &dump, &dump_prime, args.num_classes, args.sigma)?;
    fixture.validate()?;
    emit(fixture.to_json()?, args.out.as_ref())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let result = match cli.command {
        Command::Verify(args) => return verify(args),
        Command::Audit(args) => audit(args),
        Command::Exact(args) => exact(args),
        Command::Theory(args) => theory(args),
        Command::Convert(args) => convert(args),
        Command::Estimate(args) => estimate(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
