//! Known, logistic and kernel propensity models and the weights they give.

use modalms::simulate::{apply_missingness, gen_scenario, ScenarioSpec};
use modalms::{
    fit_propensity_kernel, fit_propensity_logistic, weights_for, EstimatorKind, MissingModel, Propensity,
    PropensityModel, SeedStream,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ScenarioSpec::scenario1(0.5, 1000)?;
    let ds = apply_missingness(&gen_scenario(&spec, SeedStream::new(1)), MissingModel::M1, SeedStream::new(2));
    let known = PropensityModel::known(MissingModel::M1);
    let logistic = fit_propensity_logistic(&ds)?;
    let kernel = fit_propensity_kernel(&ds, 0.08)?;

    println!("{:>5} {:>7} {:>9} {:>7}", "x", "known", "logistic", "kernel");
    for j in 0..=10 {
        let x = [j as f64 / 10.0];
        println!(
            "{:5.2} {:7.3} {:9.3} {:7.3}",
            x[0],
            known.probability(&x)?,
            logistic.probability(&x)?,
            kernel.probability(&x)?
        );
    }
    for (name, model) in [("known", &known), ("logistic", &logistic), ("kernel", &kernel)] {
        let w = weights_for(EstimatorKind::Ipw, &ds, Some(model))?;
        let max = w.as_slice().iter().copied().fold(0.0, f64::max);
        println!("{name}: {}, largest IPW weight {max:.3}", model.label());
    }
    Ok(())
}
