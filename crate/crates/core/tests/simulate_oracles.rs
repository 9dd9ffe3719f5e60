use modalms::simulate::{
    apply_missingness, gen_scenario, mixture_modes, regression_function, run_experiment, true_modal_curve,
    write_long_csv, write_summary_csv, BandwidthPolicy, ExperimentConfig, ScenarioSpec, MU1, MU2,
};
use modalms::{observed_fraction, ase, modal_curve, Bandwidths, EstimatorKind, MissingModel, SeedStream, WeightVector};

fn fixed(cfg: &mut ExperimentConfig, h1: f64, h2: f64) {
    cfg.bandwidth_policy = BandwidthPolicy::Fixed { h1, h2 };
}

#[test]
fn component_means() {
    assert_eq!(ScenarioSpec::scenario1(0.5, 10).unwrap().component_means(0.3), (MU1, MU2));
    assert_eq!(ScenarioSpec::scenario2(1.0, 10).unwrap().component_means(0.3), (1.5, 1.5));
    assert_eq!(ScenarioSpec::scenario3(0.5, 10).unwrap().component_means(1.0), (1.5, 1.5));
    assert!(ScenarioSpec::new(2, 0.5, 0.2, 10).is_err());
    assert!(ScenarioSpec::new(1, 0.5, 0.2, 10).is_err());
    assert!(ScenarioSpec::new(4, 0.5, 0.0, 10).is_err());
    assert!(ScenarioSpec::scenario1(1.5, 10).is_err());
}

#[test]
fn covariates_are_uniform() {
    let ds = gen_scenario(&ScenarioSpec::scenario1(0.5, 10_000).unwrap(), SeedStream::new(1));
    let mean: f64 = (0..ds.len()).map(|i| ds.x(i)[0]).sum::<f64>() / ds.len() as f64;
    assert!((mean - 0.5).abs() < 0.02, "{mean}");
    assert!((0..ds.len()).all(|i| (0.0..=1.0).contains(&ds.x(i)[0])));
}

#[test]
fn residuals_peak_at_the_component_means() {
    let ds = gen_scenario(&ScenarioSpec::scenario1(0.5, 10_000).unwrap(), SeedStream::new(2));
    let res: Vec<f64> = (0..ds.len()).map(|i| ds.y(i).unwrap() - regression_function(ds.x(i)[0])).collect();
    let h = 0.15;
    let kde = |e: f64| res.iter().map(|r| (-0.5 * ((e - r) / h).powi(2)).exp()).sum::<f64>();
    let grid: Vec<f64> = (0..=1200).map(|j| -4.0 + 8.0 * j as f64 / 1200.0).collect();
    let dens: Vec<f64> = grid.iter().map(|&e| kde(e)).collect();
    let tallest = dens.iter().copied().fold(0.0, f64::max);
    let peaks: Vec<f64> = (1..grid.len() - 1)
        .filter(|&j| dens[j] > dens[j - 1] && dens[j] >= dens[j + 1] && dens[j] > 0.1 * tallest)
        .map(|j| grid[j])
        .collect();
    assert_eq!(peaks.len(), 2, "{peaks:?}");
    assert!((peaks[0] + 1.5).abs() < 0.1 && (peaks[1] - 1.5).abs() < 0.1, "{peaks:?}");
}

#[test]
fn generation_and_masks_are_reproducible() {
    let spec = ScenarioSpec::scenario1(0.5, 300).unwrap();
    let a = gen_scenario(&spec, SeedStream::new(9));
    assert_eq!(a, gen_scenario(&spec, SeedStream::new(9)));
    assert_ne!(a, gen_scenario(&spec, SeedStream::new(10)));
    let m1 = apply_missingness(&a, MissingModel::M2, SeedStream::new(4));
    assert_eq!(m1, apply_missingness(&a, MissingModel::M2, SeedStream::new(4)));
    assert_eq!(m1.pre_deletion().unwrap(), a);
}

#[test]
fn masking_rates_follow_the_models() {
    let ds = gen_scenario(&ScenarioSpec::scenario1(0.5, 10_000).unwrap(), SeedStream::new(3));
    let m4 = apply_missingness(&ds, MissingModel::M4, SeedStream::new(5));
    assert!((observed_fraction(&m4) - 0.75).abs() < 0.015);

    let m1 = apply_missingness(&ds, MissingModel::M1, SeedStream::new(6));
    let rate = |lo: f64, hi: f64| {
        let rows: Vec<usize> = (0..m1.len()).filter(|&i| (lo..hi).contains(&m1.x(i)[0])).collect();
        rows.iter().filter(|&&i| m1.delta(i)).count() as f64 / rows.len() as f64
    };
    // Bin averages of 0.6 + 0.3 cos(πx) over [0, 0.05] and [0.95, 1].
    assert!((rate(0.0, 0.05) - 0.9).abs() < 0.03, "{}", rate(0.0, 0.05));
    assert!((rate(0.95, 1.0) - 0.3).abs() < 0.03, "{}", rate(0.95, 1.0));
}

#[test]
fn analytic_modal_sets() {
    let s1 = ScenarioSpec::scenario1(0.5, 10).unwrap();
    let m = mixture_modes(&s1, 0.0);
    assert_eq!(m.len(), 2);
    assert!((m[0] + 1.5).abs() < 1e-3 && (m[1] - 1.5).abs() < 1e-3, "{m:?}");

    let s2 = ScenarioSpec::scenario2(1.0, 10).unwrap();
    let mesh: Vec<Vec<f64>> = (0..11).map(|j| vec![j as f64 / 10.0]).collect();
    for set in &true_modal_curve(&s2, &mesh).sets {
        assert_eq!(set.len(), 1);
        assert!((set.modes[0] - (regression_function(set.x[0]) + 1.5)).abs() < 1e-9);
    }

    let s3 = ScenarioSpec::scenario3(0.5, 10).unwrap();
    let end = true_modal_curve(&s3, &[vec![1.0]]);
    assert_eq!(end.sets[0].len(), 1);
    assert!((end.sets[0].modes[0] - 1.5).abs() < 1e-9);
}

#[test]
fn one_replicate_summary_is_its_ase() {
    let spec = ScenarioSpec::scenario1(0.5, 120).unwrap();
    let mut cfg = ExperimentConfig::new(spec, None, 31);
    cfg.estimators = vec![EstimatorKind::Complete];
    cfg.replicates = 1;
    cfg.mesh_size = 25;
    fixed(&mut cfg, 0.08, 0.4);
    let result = run_experiment(&cfg).unwrap();

    // Rebuild the replicate from the documented seed tree.
    let ds = gen_scenario(&spec, SeedStream::new(31).child(1).child(0).child(0));
    let mesh = cfg.mesh();
    let bw = Bandwidths::new(0.08, 0.4).unwrap();
    let curve = modal_curve(&ds, &WeightVector::ones(&ds).unwrap(), bw, &mesh, &cfg.meanshift).unwrap();
    let (lo, hi) = ds.observed_range();
    let expect = ase(&curve, &true_modal_curve(&spec, &mesh), cfg.delta(), hi - lo).unwrap().value;
    assert_eq!(result.ase_values(EstimatorKind::Complete), vec![expect]);
    assert_eq!(result.mean_x1000(EstimatorKind::Complete), Some(1000.0 * expect));
}

#[test]
fn experiments_are_reproducible_and_tabulated() {
    let mut cfg = ExperimentConfig::new(ScenarioSpec::scenario1(0.5, 80).unwrap(), Some(MissingModel::M4), 8);
    cfg.replicates = 3;
    cfg.mesh_size = 10;
    cfg.imputations = 3;
    fixed(&mut cfg, 0.1, 0.5);
    let a = run_experiment(&cfg).unwrap();
    assert_eq!(a, run_experiment(&cfg).unwrap());
    for kind in EstimatorKind::ALL {
        let v = a.ase_values(kind);
        assert_eq!(v.len(), 3);
        let mean = 1000.0 * v.iter().sum::<f64>() / 3.0;
        assert!((a.mean_x1000(kind).unwrap() - mean).abs() <= 1e-12 * mean);
    }
    let mut summary = Vec::new();
    write_summary_csv(std::slice::from_ref(&a), &mut summary).unwrap();
    let summary = String::from_utf8(summary).unwrap();
    assert_eq!(summary.lines().next(), Some("model,C,S,W,SI,MI"));
    assert!(summary.lines().nth(1).unwrap().starts_with("M4,"));
    let mut long = Vec::new();
    write_long_csv(std::slice::from_ref(&a), &mut long).unwrap();
    assert_eq!(String::from_utf8(long).unwrap().lines().count(), 1 + 3 * 5);
}

#[test]
fn invalid_configs_are_rejected() {
    let mut cfg = ExperimentConfig::new(ScenarioSpec::scenario1(0.5, 50).unwrap(), Some(MissingModel::M1), 1);
    cfg.replicates = 0;
    assert!(run_experiment(&cfg).is_err());
    cfg.replicates = 1;
    cfg.imputations = 1;
    assert!(run_experiment(&cfg).is_err());
}

#[test]
fn complete_estimator_ignores_the_missingness_model() {
    let spec = ScenarioSpec::scenario1(0.5, 100).unwrap();
    let mut values = Vec::new();
    for model in MissingModel::ALL {
        let mut cfg = ExperimentConfig::new(spec, Some(model), 77);
        cfg.estimators = vec![EstimatorKind::Complete, EstimatorKind::Simplified];
        cfg.replicates = 4;
        cfg.mesh_size = 12;
        fixed(&mut cfg, 0.08, 0.4);
        values.push(run_experiment(&cfg).unwrap().ase_values(EstimatorKind::Complete));
    }
    assert!(values.windows(2).all(|p| p[0] == p[1]), "{values:?}");
}

#[test]
fn deleting_responses_does_not_help_on_average() {
    let mut cfg = ExperimentConfig::new(ScenarioSpec::scenario1(0.5, 200).unwrap(), Some(MissingModel::M1), 13);
    cfg.estimators = vec![EstimatorKind::Complete, EstimatorKind::Simplified];
    cfg.replicates = 60;
    cfg.mesh_size = 20;
    fixed(&mut cfg, 0.06, 0.35);
    let r = run_experiment(&cfg).unwrap();
    let c = r.mean_x1000(EstimatorKind::Complete).unwrap();
    let s = r.mean_x1000(EstimatorKind::Simplified).unwrap();
    assert!(s >= c, "S {s} < C {c}");
}
