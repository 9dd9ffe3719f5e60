//! Selects `(h1, h2)` by inverse-probability-weighted leave-one-out
//! cross-validation over the default grid.

use modalms::simulate::{apply_missingness, gen_scenario, ScenarioSpec};
use modalms::{
    fit_propensity_logistic, select_bandwidths, BandwidthGrid, CovariateWeight, MeanShiftConfig, MissingModel,
    SeedStream,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ScenarioSpec::scenario1(0.5, 150)?;
    let ds = apply_missingness(&gen_scenario(&spec, SeedStream::new(21)), MissingModel::M3, SeedStream::new(22));
    let propensity = fit_propensity_logistic(&ds)?;
    let grid = BandwidthGrid::default_for(&ds)?;
    let (best, table) =
        select_bandwidths(&ds, &propensity, &grid, &CovariateWeight::central_region(&ds), &MeanShiftConfig::default())?;

    let mut rows: Vec<_> = table.rows.iter().filter(|r| r.cv.is_some()).collect();
    rows.sort_by(|a, b| a.cv.unwrap().total_cmp(&b.cv.unwrap()));
    println!("{:>8} {:>8} {:>10}", "h1", "h2", "CV");
    for r in rows.iter().take(8) {
        println!("{:8.4} {:8.4} {:10.5}", r.h1, r.h2, r.cv.unwrap());
    }
    println!("selected h1 = {:.4}, h2 = {:.4}", best.h1(), best.h2());
    Ok(())
}
