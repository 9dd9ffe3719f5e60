//! Compares the five estimators on one sample with responses missing at
//! random.

use modalms::simulate::{apply_missingness, gen_scenario, true_modal_curve, ScenarioSpec};
use modalms::{
    ase, fit_propensity_logistic, impute_single, modal_curve, multiple_imputation_curve, weights_for, Bandwidths,
    EstimatorKind, MeanShiftConfig, MissingModel, ModalCurve, PoolConfig, PropensityModel, SeedStream, WeightVector,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = ScenarioSpec::scenario1(0.75, 300)?;
    let complete = gen_scenario(&spec, SeedStream::new(11));
    let masked = apply_missingness(&complete, MissingModel::M1, SeedStream::new(12));
    println!("observed fraction {:.3}", modalms::observed_fraction(&masked));

    let bw = Bandwidths::new(0.06, 0.45)?;
    let cfg = MeanShiftConfig::default();
    let mesh: Vec<Vec<f64>> = (0..100).map(|j| vec![(j as f64 + 0.5) / 100.0]).collect();
    let truth = true_modal_curve(&spec, &mesh);
    let (lo, hi) = complete.observed_range();
    let score = |c: &ModalCurve| ase(c, &truth, 0.01, hi - lo).map(|r| r.value);

    let c = modal_curve(&complete, &WeightVector::ones(&complete)?, bw, &mesh, &cfg)?;
    let s = modal_curve(&masked, &WeightVector::observed(&masked), bw, &mesh, &cfg)?;
    let known = PropensityModel::known(MissingModel::M1);
    let w = modal_curve(&masked, &weights_for(EstimatorKind::Ipw, &masked, Some(&known))?, bw, &mesh, &cfg)?;
    let fitted = fit_propensity_logistic(&masked)?;
    let w_fit = modal_curve(&masked, &weights_for(EstimatorKind::Ipw, &masked, Some(&fitted))?, bw, &mesh, &cfg)?;
    let filled = impute_single(&masked, bw, &cfg)?.completed();
    let si = modal_curve(&filled, &WeightVector::ones(&filled)?, bw, &mesh, &cfg)?;
    let mi = multiple_imputation_curve(&masked, bw, &cfg, 20, &mesh, SeedStream::new(13), &PoolConfig::default())?;

    for (name, curve) in [("C", &c), ("S", &s), ("W known", &w), ("W logistic", &w_fit), ("SI", &si), ("MI", &mi)] {
        println!("{name:<11} ASE = {:.4}", score(curve)?);
    }
    Ok(())
}
