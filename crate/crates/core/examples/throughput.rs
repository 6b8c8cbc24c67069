use predaudit::campaign::{audit_scenario, CampaignConfig};
use predaudit::scenario::Fixture;
use std::time::Instant;

fn main() {
    let path = std::env::args().nth(1).expect("fixture path");
    let scenario = Fixture::load(path.as_ref()).unwrap().validate().unwrap();
    let mut config = CampaignConfig::new(&path, "unused");
    config.trials = 20_000_000;
    config.workers = 1;
    let start = Instant::now();
    let report = audit_scenario(&scenario, &config, None).unwrap();
    let secs = start.elapsed().as_secs_f64();
    println!("{:.2e} trial pairs/s on one worker", config.trials as f64 / secs);
    println!("{:?}", report.report.composed[0].curve.values());
    println!("{:?}", report.report.composed_exact.as_ref().unwrap().values());
}
