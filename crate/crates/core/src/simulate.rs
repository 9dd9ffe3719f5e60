//! Benchmark generators, their analytic modal curves, and the Monte Carlo
//! experiment runner.
//!
//! Data follow `Y = 2 sin(2πX) + ε` with `X ~ U(0, 1)` and
//! `ε ~ k N(μ₁ + (μ₂ − μ₁) a, σ) + (1 − k) N(μ₂, σ)`, `μ₁ = −1.5`,
//! `μ₂ = 1.5`, `σ = 0.5`. Scenario 1 fixes `a = 0`, scenario 2 fixes
//! `k = 0.75`, and scenario 3 sets `a = X`.

use std::f64::consts::PI;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bandwidth::{select_bandwidths, BandwidthError, BandwidthGrid, CovariateWeight};
use crate::dataset::{Dataset, Sample};
use crate::imputation::{impute_single, multiple_imputation_curve, ImputationError, PoolConfig};
use crate::kernel_density::{Bandwidths, KdeError, WeightVector};
use crate::meanshift::{equispaced_mesh, modal_curve, MeanShiftConfig, MeanShiftError, ModalCurve, ModalSet};
use crate::metrics::{ase, AseReport, MetricError};
use crate::missing::{
    fit_propensity_kernel, fit_propensity_logistic, silverman_propensity_bandwidth, weights_for, EstimatorKind,
    MissingModel, Propensity, PropensityError, PropensityModel,
};
use crate::rng::SeedStream;
use crate::stats::sig6;

pub const MU1: f64 = -1.5;
pub const MU2: f64 = 1.5;
pub const SIGMA: f64 = 0.5;
/// Mixing weight scenario 2 always uses.
pub const SCENARIO2_K: f64 = 0.75;

/// Share of failed replicates above which an experiment is rejected.
pub const MAX_FAILED_FRACTION: f64 = 0.1;

const STREAM_PILOT: u64 = 0;
const STREAM_REPLICATES: u64 = 1;
const STAGE_GENERATE: u64 = 0;
const STAGE_MASK: u64 = 1;
const STAGE_MI: u64 = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error("invalid scenario: {0}")]
    Scenario(String),
    #[error("invalid experiment: {0}")]
    Config(String),
    #[error("{failed} of {total} replicates failed; first failure: {first}")]
    TooManyFailures { failed: usize, total: usize, first: String },
    #[error(transparent)]
    Bandwidth(#[from] BandwidthError),
    #[error(transparent)]
    MeanShift(#[from] MeanShiftError),
    #[error(transparent)]
    Imputation(#[from] ImputationError),
    #[error(transparent)]
    Propensity(#[from] PropensityError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Kde(#[from] KdeError),
}

/// One of the three benchmark scenarios with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScenario")]
pub struct ScenarioSpec {
    id: u8,
    k: f64,
    a: f64,
    n: usize,
}

#[derive(Deserialize)]
struct RawScenario {
    id: u8,
    k: f64,
    a: f64,
    n: usize,
}

impl TryFrom<RawScenario> for ScenarioSpec {
    type Error = SimulationError;
    fn try_from(r: RawScenario) -> Result<Self, Self::Error> {
        ScenarioSpec::new(r.id, r.k, r.a, r.n)
    }
}

impl ScenarioSpec {
    /// Validating constructor. Scenario 2 requires `k = 0.75`; scenario 1
    /// requires `a = 0`; scenario 3 ignores `a` and stores 0.
    pub fn new(id: u8, k: f64, a: f64, n: usize) -> Result<Self, SimulationError> {
        if !(0.0..=1.0).contains(&k) {
            return Err(SimulationError::Scenario(format!("k = {k} outside [0, 1]")));
        }
        if !(-1.0..=1.0).contains(&a) {
            return Err(SimulationError::Scenario(format!("a = {a} outside [-1, 1]")));
        }
        if n == 0 {
            return Err(SimulationError::Scenario("n must be positive".into()));
        }
        match id {
            1 if a != 0.0 => Err(SimulationError::Scenario("scenario 1 has a = 0".into())),
            2 if k != SCENARIO2_K => Err(SimulationError::Scenario(format!("scenario 2 has k = {SCENARIO2_K}"))),
            1 | 2 => Ok(ScenarioSpec { id, k, a, n }),
            3 => Ok(ScenarioSpec { id, k, a: 0.0, n }),
            other => Err(SimulationError::Scenario(format!("unknown scenario {other}"))),
        }
    }

    pub fn scenario1(k: f64, n: usize) -> Result<Self, SimulationError> {
        Self::new(1, k, 0.0, n)
    }

    pub fn scenario2(a: f64, n: usize) -> Result<Self, SimulationError> {
        Self::new(2, SCENARIO2_K, a, n)
    }

    pub fn scenario3(k: f64, n: usize) -> Result<Self, SimulationError> {
        Self::new(3, k, 0.0, n)
    }

    pub fn id(&self) -> u8 {
        self.id
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The separation parameter in effect at covariate `x`.
    pub fn a_eff(&self, x: f64) -> f64 {
        if self.id == 3 { x } else { self.a }
    }

    /// Means of the two error components at `x`.
    pub fn component_means(&self, x: f64) -> (f64, f64) {
        (MU1 + (MU2 - MU1) * self.a_eff(x), MU2)
    }

    /// Density of the error mixture at `e`, given `X = x`.
    pub fn error_density(&self, x: f64, e: f64) -> f64 {
        let (m1, m2) = self.component_means(x);
        let phi = |m: f64| {
            let u = (e - m) / SIGMA;
            (-0.5 * u * u).exp() / (SIGMA * (2.0 * PI).sqrt())
        };
        self.k * phi(m1) + (1.0 - self.k) * phi(m2)
    }
}

/// `2 sin(2πx)`.
pub fn regression_function(x: f64) -> f64 {
    2.0 * (2.0 * PI * x).sin()
}

/// One draw of the error variable at covariate `x`.
pub fn mixture_error_draw<R: Rng + ?Sized>(spec: &ScenarioSpec, x: f64, rng: &mut R) -> f64 {
    let (m1, m2) = spec.component_means(x);
    let mean = if rng.random::<f64>() < spec.k { m1 } else { m2 };
    Normal::new(mean, SIGMA).expect("positive sd").sample(rng)
}

/// A complete sample of size `n` from the scenario.
pub fn gen_scenario(spec: &ScenarioSpec, stream: SeedStream) -> Dataset {
    let mut rng = stream.rng();
    let mut x = Vec::with_capacity(spec.n);
    let mut y = Vec::with_capacity(spec.n);
    for _ in 0..spec.n {
        let xi: f64 = rng.random();
        let e = mixture_error_draw(spec, xi, &mut rng);
        x.push(xi);
        y.push(regression_function(xi) + e);
    }
    Dataset::from_xy(&x, &y).expect("finite draws")
}

const MODE_GRID_POINTS: usize = 4001;

/// Strict local maxima of the error mixture density at covariate `x`:
/// a dense grid scan followed by fixed-point refinement on the analytic
/// density.
pub fn mixture_modes(spec: &ScenarioSpec, x: f64) -> Vec<f64> {
    let lo = MU1 - 4.0 * SIGMA;
    let hi = MU2 + 4.0 * SIGMA;
    let step = (hi - lo) / (MODE_GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..MODE_GRID_POINTS).map(|j| spec.error_density(x, lo + step * j as f64)).collect();
    let (m1, m2) = spec.component_means(x);
    let weights = [spec.k, 1.0 - spec.k];
    let means = [m1, m2];
    let mut modes: Vec<f64> = Vec::new();
    for j in 1..MODE_GRID_POINTS - 1 {
        if grid[j] > grid[j - 1] && grid[j] > grid[j + 1] {
            // Equal-variance mixture: the mean-shift map is the
            // responsibility-weighted mean of the component means.
            let mut e = lo + step * j as f64;
            for _ in 0..100_000 {
                let (num, den) = weights.iter().zip(&means).fold((0.0, 0.0), |(n, d), (w, m)| {
                    let u = (e - m) / SIGMA;
                    let r = w * (-0.5 * u * u).exp();
                    (n + r * m, d + r)
                });
                let next = num / den;
                let done = (next - e).abs() < 1e-14;
                e = next;
                if done {
                    break;
                }
            }
            if modes.last().is_none_or(|&prev| (e - prev).abs() > 1e-9) {
                modes.push(e);
            }
        }
    }
    modes
}

/// The analytic modal set at every mesh point. Densities are conditional
/// densities of `Y` given `X`.
pub fn true_modal_curve(spec: &ScenarioSpec, mesh: &[Vec<f64>]) -> ModalCurve {
    let sets = mesh
        .iter()
        .map(|x| {
            let m = mixture_modes(spec, x[0]);
            let shift = regression_function(x[0]);
            ModalSet {
                x: x.clone(),
                modes: m.iter().map(|e| shift + e).collect(),
                densities: m.iter().map(|&e| spec.error_density(x[0], e)).collect(),
            }
        })
        .collect();
    ModalCurve { mesh: mesh.to_vec(), sets }
}

/// Masks each response independently with probability `1 − p(Xᵢ)`. The
/// unmasked responses stay attached for the complete-data estimator.
pub fn apply_missingness(ds: &Dataset, model: MissingModel, stream: SeedStream) -> Dataset {
    let mut rng = stream.rng();
    let full: Vec<f64> = ds.responses().iter().map(|v| v.expect("complete input")).collect();
    let samples = (0..ds.len())
        .map(|i| {
            let x = ds.x(i).to_vec();
            let keep = rng.random::<f64>() < model.probability(x[0]);
            if keep { Sample::observed(x, full[i]) } else { Sample::missing(x) }
        })
        .collect();
    Dataset::new(samples).expect("same shape as input").with_pre_deletion(full)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "policy")]
pub enum BandwidthPolicy {
    /// Cross-validate on every replicate.
    CvPerReplicate,
    /// Cross-validate once on a pilot sample and reuse the pair.
    CvPilot,
    Fixed { h1: f64, h2: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropensityMode {
    /// The generating missingness model.
    Known,
    Logistic,
    Kernel,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSpec,
    /// `None` keeps every response.
    pub missing_model: Option<MissingModel>,
    pub estimators: Vec<EstimatorKind>,
    pub replicates: usize,
    pub mesh_size: usize,
    pub bandwidth_policy: BandwidthPolicy,
    pub propensity_mode: PropensityMode,
    pub imputations: usize,
    pub master_seed: u64,
    pub meanshift: MeanShiftConfig,
    pub pool: PoolConfig,
}

impl ExperimentConfig {
    /// All five estimators, 100 replicates, a 200-point mesh, pilot CV,
    /// known propensity and 20 imputations.
    pub fn new(scenario: ScenarioSpec, missing_model: Option<MissingModel>, master_seed: u64) -> Self {
        ExperimentConfig {
            scenario,
            missing_model,
            estimators: EstimatorKind::ALL.to_vec(),
            replicates: 100,
            mesh_size: 200,
            bandwidth_policy: BandwidthPolicy::CvPilot,
            propensity_mode: PropensityMode::Known,
            imputations: 20,
            master_seed,
            meanshift: MeanShiftConfig::default(),
            pool: PoolConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<(), SimulationError> {
        if self.replicates == 0 {
            return Err(SimulationError::Config("replicates must be positive".into()));
        }
        if self.mesh_size == 0 {
            return Err(SimulationError::Config("mesh size must be positive".into()));
        }
        if self.estimators.is_empty() {
            return Err(SimulationError::Config("no estimators requested".into()));
        }
        if self.estimators.contains(&EstimatorKind::MultipleImputation) && self.imputations < 2 {
            return Err(SimulationError::Config("multiple imputation needs at least 2 imputations".into()));
        }
        if let BandwidthPolicy::Fixed { h1, h2 } = self.bandwidth_policy {
            Bandwidths::new(h1, h2)?;
        }
        Ok(())
    }

    /// Midpoints of `mesh_size` equal cells of `[0, 1]`.
    pub fn mesh(&self) -> Vec<Vec<f64>> {
        let half = 0.5 / self.mesh_size as f64;
        equispaced_mesh(self.mesh_size, half, 1.0 - half)
    }

    /// Grid resolution `Δ = 1 / mesh_size`.
    pub fn delta(&self) -> f64 {
        1.0 / self.mesh_size as f64
    }
}

/// Bandwidths used by one replicate: `complete` for C, `missing` for the
/// other estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthPair {
    pub complete: Bandwidths,
    pub missing: Bandwidths,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorAse {
    pub estimator: EstimatorKind,
    pub ase: f64,
    pub empty_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub bandwidths: BandwidthPair,
    pub observed_fraction: f64,
    pub results: Vec<EstimatorAse>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateFailure {
    pub replicate: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub estimator: EstimatorKind,
    /// Mean ASE × 1000 over successful replicates.
    pub mean_ase_x1000: f64,
    pub empty_points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    /// Set when the pilot policy fixed the bandwidths for every replicate.
    pub pilot_bandwidths: Option<BandwidthPair>,
    pub replicates: Vec<ReplicateRecord>,
    pub failures: Vec<ReplicateFailure>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentResult {
    /// Mean ASE × 1000 of one estimator.
    pub fn mean_x1000(&self, kind: EstimatorKind) -> Option<f64> {
        self.summary.iter().find(|r| r.estimator == kind).map(|r| r.mean_ase_x1000)
    }

    /// Per-replicate ASE of one estimator, in replicate order.
    pub fn ase_values(&self, kind: EstimatorKind) -> Vec<f64> {
        self.replicates
            .iter()
            .flat_map(|r| r.results.iter().filter(|e| e.estimator == kind).map(|e| e.ase))
            .collect()
    }

    /// Row label for tables: the missingness model or `none`.
    pub fn model_label(&self) -> String {
        self.config.missing_model.map_or_else(|| "none".to_string(), |m| m.to_string())
    }
}

struct ObservedAll;

impl Propensity for ObservedAll {
    fn probability(&self, _x: &[f64]) -> Result<f64, PropensityError> {
        Ok(1.0)
    }
}

fn propensity_for(
    cfg: &ExperimentConfig,
    ds: &Dataset,
) -> Result<Box<dyn Propensity + Send>, SimulationError> {
    let Some(model) = cfg.missing_model else {
        return Ok(Box::new(ObservedAll));
    };
    Ok(match cfg.propensity_mode {
        PropensityMode::Known => Box::new(PropensityModel::known(model)),
        PropensityMode::Logistic => Box::new(fit_propensity_logistic(ds)?),
        PropensityMode::Kernel => Box::new(fit_propensity_kernel(ds, silverman_propensity_bandwidth(ds))?),
    })
}

/// Draws one replicate's data: the complete sample and its masked version.
fn draw_replicate(cfg: &ExperimentConfig, stream: SeedStream) -> (Dataset, Dataset) {
    let complete = gen_scenario(&cfg.scenario, stream.child(STAGE_GENERATE));
    let masked = match cfg.missing_model {
        Some(m) => apply_missingness(&complete, m, stream.child(STAGE_MASK)),
        None => complete.clone(),
    };
    (complete, masked)
}

/// Cross-validated bandwidths: C on the complete sample with `p ≡ 1`, the
/// others on the masked sample with the propensity.
fn cross_validate(
    cfg: &ExperimentConfig,
    complete: &Dataset,
    masked: &Dataset,
    propensity: &dyn Propensity,
) -> Result<BandwidthPair, SimulationError> {
    let cv = |ds: &Dataset, p: &dyn Propensity| -> Result<Bandwidths, SimulationError> {
        let grid = BandwidthGrid::default_for(ds)?;
        let w = CovariateWeight::central_region(ds);
        Ok(select_bandwidths(ds, p, &grid, &w, &cfg.meanshift)?.0)
    };
    let needs_complete = cfg.estimators.contains(&EstimatorKind::Complete);
    let needs_missing = cfg.estimators.iter().any(|e| *e != EstimatorKind::Complete);
    let c = if needs_complete || cfg.missing_model.is_none() { Some(cv(complete, &ObservedAll)?) } else { None };
    let m = match (cfg.missing_model, needs_missing) {
        (Some(_), true) => Some(cv(masked, propensity)?),
        _ => None,
    };
    let (complete_bw, missing_bw) = match (c, m) {
        (Some(c), Some(m)) => (c, m),
        (Some(c), None) => (c, c),
        (None, Some(m)) => (m, m),
        (None, None) => unreachable!("at least one estimator"),
    };
    Ok(BandwidthPair { complete: complete_bw, missing: missing_bw })
}

fn run_replicate(
    cfg: &ExperimentConfig,
    index: usize,
    stream: SeedStream,
    pilot: Option<BandwidthPair>,
    mesh: &[Vec<f64>],
    truth: &ModalCurve,
) -> Result<ReplicateRecord, SimulationError> {
    let (complete, masked) = draw_replicate(cfg, stream);
    let propensity = propensity_for(cfg, &masked)?;
    let bandwidths = match (cfg.bandwidth_policy, pilot) {
        (BandwidthPolicy::Fixed { h1, h2 }, _) => {
            let bw = Bandwidths::new(h1, h2)?;
            BandwidthPair { complete: bw, missing: bw }
        }
        (_, Some(p)) => p,
        (_, None) => cross_validate(cfg, &complete, &masked, propensity.as_ref())?,
    };
    let (lo, hi) = complete.observed_range();
    let penalty = hi - lo;
    let bw = bandwidths.missing;
    let ms = &cfg.meanshift;
    let mut results = Vec::with_capacity(cfg.estimators.len());
    for &kind in &cfg.estimators {
        let curve = match kind {
            EstimatorKind::Complete => modal_curve(&complete, &WeightVector::ones(&complete)?, bandwidths.complete, mesh, ms)?,
            EstimatorKind::Simplified | EstimatorKind::Ipw => {
                let w = weights_for(kind, &masked, Some(propensity.as_ref()))?;
                modal_curve(&masked, &w, bw, mesh, ms)?
            }
            EstimatorKind::SingleImputation => {
                let filled = impute_single(&masked, bw, ms)?.completed();
                modal_curve(&filled, &WeightVector::ones(&filled)?, bw, mesh, ms)?
            }
            EstimatorKind::MultipleImputation => multiple_imputation_curve(
                &masked,
                bw,
                ms,
                cfg.imputations,
                mesh,
                stream.child(STAGE_MI),
                &cfg.pool,
            )?,
        };
        let AseReport { value, empty_points } = ase(&curve, truth, cfg.delta(), penalty)?;
        results.push(EstimatorAse { estimator: kind, ase: value, empty_points });
    }
    Ok(ReplicateRecord {
        replicate: index,
        bandwidths,
        observed_fraction: masked.n_observed() as f64 / masked.len() as f64,
        results,
    })
}

/// Runs every replicate and aggregates mean ASE × 1000 per estimator.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult, SimulationError> {
    cfg.validate()?;
    let master = SeedStream::new(cfg.master_seed);
    let mesh = cfg.mesh();
    let truth = true_modal_curve(&cfg.scenario, &mesh);
    let pilot = match cfg.bandwidth_policy {
        BandwidthPolicy::CvPilot => {
            let (complete, masked) = draw_replicate(cfg, master.child(STREAM_PILOT));
            let propensity = propensity_for(cfg, &masked)?;
            Some(cross_validate(cfg, &complete, &masked, propensity.as_ref())?)
        }
        _ => None,
    };
    let replicate_root = master.child(STREAM_REPLICATES);
    let outcomes: Vec<Result<ReplicateRecord, SimulationError>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| run_replicate(cfg, r, replicate_root.child(r as u64), pilot, &mesh, &truth))
        .collect();
    let mut replicates = Vec::new();
    let mut failures = Vec::new();
    for (r, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(rec) => replicates.push(rec),
            Err(e) => failures.push(ReplicateFailure { replicate: r, error: e.to_string() }),
        }
    }
    if failures.len() as f64 > MAX_FAILED_FRACTION * cfg.replicates as f64 {
        return Err(SimulationError::TooManyFailures {
            failed: failures.len(),
            total: cfg.replicates,
            first: failures[0].error.clone(),
        });
    }
    let summary = cfg
        .estimators
        .iter()
        .map(|&kind| {
            let vals: Vec<&EstimatorAse> =
                replicates.iter().flat_map(|r| r.results.iter().filter(move |e| e.estimator == kind)).collect();
            let mean = vals.iter().map(|e| e.ase).sum::<f64>() / vals.len() as f64;
            SummaryRow {
                estimator: kind,
                mean_ase_x1000: 1000.0 * mean,
                empty_points: vals.iter().map(|e| e.empty_points).sum(),
            }
        })
        .collect();
    Ok(ExperimentResult { config: cfg.clone(), pilot_bandwidths: pilot, replicates, failures, summary })
}

/// Tables-style CSV: one row per result (missingness model), one column
/// per estimator, values mean ASE × 1000.
pub fn write_summary_csv<W: Write>(results: &[ExperimentResult], writer: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    let kinds: Vec<EstimatorKind> =
        EstimatorKind::ALL.into_iter().filter(|k| results.iter().any(|r| r.mean_x1000(*k).is_some())).collect();
    let mut header = vec!["model".to_string()];
    header.extend(kinds.iter().map(|k| k.tag().to_string()));
    w.write_record(&header)?;
    for r in results {
        let mut row = vec![r.model_label()];
        row.extend(kinds.iter().map(|k| r.mean_x1000(*k).map_or_else(|| "NA".into(), sig6)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Long-format CSV `model,replicate,estimator,ase` for violin plots.
pub fn write_long_csv<W: Write>(results: &[ExperimentResult], writer: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["model", "replicate", "estimator", "ase"])?;
    for r in results {
        let label = r.model_label();
        for rec in &r.replicates {
            for e in &rec.results {
                w.write_record([label.clone(), rec.replicate.to_string(), e.estimator.tag().to_string(), sig6(e.ase)])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
