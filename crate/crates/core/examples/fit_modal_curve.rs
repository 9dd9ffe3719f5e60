//! Fits the complete-data modal curve on a bimodal sample and scores it
//! against the true modal sets.

use modalms::simulate::{gen_scenario, true_modal_curve, ScenarioSpec};
use modalms::{ase, modal_curve, Bandwidths, MeanShiftConfig, SeedStream, WeightVector};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ScenarioSpec::scenario1(0.5, 300)?;
    let ds = gen_scenario(&spec, SeedStream::new(7));
    let bw = Bandwidths::new(0.06, 0.4)?;
    let mesh: Vec<Vec<f64>> = (0..50).map(|j| vec![(j as f64 + 0.5) / 50.0]).collect();

    let curve = modal_curve(&ds, &WeightVector::ones(&ds)?, bw, &mesh, &MeanShiftConfig::default())?;
    let truth = true_modal_curve(&spec, &mesh);

    println!("{:>6}  {:<28}  true modes", "x", "estimated modes");
    for (est, tru) in curve.sets.iter().zip(&truth.sets).step_by(5) {
        let fmt = |v: &[f64]| v.iter().map(|m| format!("{m:7.3}")).collect::<Vec<_>>().join(" ");
        println!("{:6.3}  {:<28}  {}", est.x[0], fmt(&est.modes), fmt(&tru.modes));
    }

    let (lo, hi) = ds.observed_range();
    let report = ase(&curve, &truth, 1.0 / mesh.len() as f64, hi - lo)?;
    println!("ASE = {:.4} ({} empty sets)", report.value, report.empty_points);
    Ok(())
}
