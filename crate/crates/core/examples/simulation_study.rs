//! A small seeded Monte Carlo study with fixed bandwidths, written as the
//! summary CSV to stdout.

use modalms::simulate::{run_experiment, write_summary_csv, BandwidthPolicy, ExperimentConfig, ScenarioSpec};
use modalms::MissingModel;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut results = Vec::new();
    for model in [MissingModel::M1, MissingModel::M4] {
        let mut cfg = ExperimentConfig::new(ScenarioSpec::scenario1(0.75, 150)?, Some(model), 2024);
        cfg.replicates = 10;
        cfg.mesh_size = 50;
        cfg.imputations = 5;
        cfg.bandwidth_policy = BandwidthPolicy::Fixed { h1: 0.08, h2: 0.45 };
        let r = run_experiment(&cfg)?;
        eprintln!("{}: {} replicates, {} failed", r.model_label(), r.replicates.len(), r.failures.len());
        results.push(r);
    }
    write_summary_csv(&results, std::io::stdout())?;
    Ok(())
}
