//! Command-line front end: `fit`, `impute`, `bandwidth` and `simulate`.
//!
//! Every command writes its data files plus a `manifest.json` into the
//! output directory. Data files depend only on the inputs and flags; the
//! manifest also carries timestamps.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::bandwidth::{select_bandwidths, BandwidthGrid, CovariateWeight};
use crate::dataset::{load_dataset, write_dataset, ColumnSpec, Dataset};
use crate::imputation::{impute_random_draw, impute_single, multiple_imputation_curve, PoolConfig, Provenance};
use crate::kernel_density::{Bandwidths, WeightVector};
use crate::meanshift::{equispaced_mesh, modal_curve, MeanShiftConfig, ModalCurve};
use crate::missing::{
    fit_propensity_kernel, fit_propensity_logistic, silverman_propensity_bandwidth, weights_for, EstimatorKind,
    MissingModel, Propensity, PropensityError, PropensityModel, DEFAULT_CLAMP_FLOOR,
};
use crate::rng::SeedStream;
use crate::simulate::{
    run_experiment, write_long_csv, write_summary_csv, BandwidthPolicy, ExperimentConfig, PropensityMode,
    ScenarioSpec, SCENARIO2_K,
};
use crate::stats::sig6;

#[derive(Debug, Parser)]
#[command(name = "modalms", version, about = "Modal regression with responses missing at random")]
pub struct Cli {
    /// Worker threads; output does not depend on this.
    #[arg(long, global = true, env = "MODALMS_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate a modal regression curve from a CSV file.
    Fit(FitArgs),
    /// Fill missing responses with conditional modes.
    Impute(ImputeArgs),
    /// Score a bandwidth grid by cross-validation.
    Bandwidth(BandwidthArgs),
    /// Run a Monte Carlo study on the benchmark scenarios.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args, Clone)]
pub struct DataArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated covariate columns.
    #[arg(long, value_delimiter = ',', default_value = "x")]
    pub covariates: Vec<String>,
    /// Response column; empty or NA cells are missing.
    #[arg(long, default_value = "y")]
    pub response: String,
    /// Output directory (created if absent).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Clone)]
pub struct EngineArgs {
    #[arg(long, default_value_t = 30)]
    pub n_starts: usize,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    /// Absolute convergence tolerance; default is 1e-6 times the response range.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Mode merge radius; default is h2 / 2.
    #[arg(long)]
    pub merge_tol: Option<f64>,
}

impl EngineArgs {
    fn config(&self) -> MeanShiftConfig {
        let mut cfg = MeanShiftConfig { n_starts: self.n_starts, max_iter: self.max_iter, merge_tol: self.merge_tol, ..Default::default() };
        if let Some(t) = self.tol {
            cfg.tol = crate::meanshift::Tolerance::Absolute(t);
        }
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EstimatorArg {
    C,
    S,
    W,
    Si,
    Mi,
}

impl From<EstimatorArg> for EstimatorKind {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::C => EstimatorKind::Complete,
            EstimatorArg::S => EstimatorKind::Simplified,
            EstimatorArg::W => EstimatorKind::Ipw,
            EstimatorArg::Si => EstimatorKind::SingleImputation,
            EstimatorArg::Mi => EstimatorKind::MultipleImputation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PropensityArg {
    KnownM1,
    KnownM2,
    KnownM3,
    KnownM4,
    Logistic,
    Kernel,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum)]
    pub estimator: EstimatorArg,
    /// Covariate bandwidth; omit both bandwidths to cross-validate.
    #[arg(long)]
    pub h1: Option<f64>,
    #[arg(long)]
    pub h2: Option<f64>,
    /// Number of equispaced mesh points over the covariate range
    /// (one-dimensional covariates; otherwise the covariate rows are used).
    #[arg(long, default_value_t = 200)]
    pub mesh: usize,
    #[arg(long, value_enum)]
    pub propensity: Option<PropensityArg>,
    #[arg(long, default_value_t = DEFAULT_CLAMP_FLOOR)]
    pub clamp_floor: f64,
    #[arg(long, default_value_t = 20)]
    pub imputations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ImputeMethod {
    /// Highest-density conditional mode.
    Single,
    /// One mode drawn in proportion to its conditional density.
    Draw,
}

#[derive(Debug, Args)]
pub struct ImputeArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum, default_value = "single")]
    pub method: ImputeMethod,
    #[arg(long)]
    pub h1: f64,
    #[arg(long)]
    pub h2: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightArg {
    /// Indicator of the 5th to 95th percentile region of each covariate.
    Central,
    One,
}

#[derive(Debug, Args)]
pub struct BandwidthArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Comma-separated h1 candidates; default scales with the covariate range.
    #[arg(long, value_delimiter = ',')]
    pub h1_grid: Option<Vec<f64>>,
    /// Comma-separated h2 candidates; default scales with the response spread.
    #[arg(long, value_delimiter = ',')]
    pub h2_grid: Option<Vec<f64>>,
    /// Required when responses are missing.
    #[arg(long, value_enum)]
    pub propensity: Option<PropensityArg>,
    #[arg(long, default_value_t = DEFAULT_CLAMP_FLOOR)]
    pub clamp_floor: f64,
    #[arg(long, value_enum, default_value = "central")]
    pub weight: WeightArg,
    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CvArg {
    Pilot,
    PerReplicate,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MissingArg {
    M1,
    M2,
    M3,
    M4,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PropensityModeArg {
    Known,
    Logistic,
    Kernel,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    pub scenario: u8,
    /// Mixing weight; defaults to 0.5 (0.75 in scenario 2, which fixes it).
    #[arg(long)]
    pub k: Option<f64>,
    /// Mode separation parameter of scenario 2.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub a: f64,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    /// Comma-separated missingness models; one summary row each.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "m1,m2,m3,m4")]
    pub missing: Vec<MissingArg>,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "c,s,w,si,mi")]
    pub estimators: Vec<EstimatorArg>,
    #[arg(long, default_value_t = 100)]
    pub replicates: usize,
    #[arg(long, default_value_t = 200)]
    pub mesh: usize,
    #[arg(long, value_enum, default_value = "pilot")]
    pub cv: CvArg,
    /// Bandwidths for `--cv fixed`.
    #[arg(long)]
    pub h1: Option<f64>,
    #[arg(long)]
    pub h2: Option<f64>,
    #[arg(long, value_enum, default_value = "known")]
    pub propensity_mode: PropensityModeArg,
    #[arg(long, default_value_t = 20)]
    pub imputations: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[command(flatten)]
    pub engine: EngineArgs,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "error: {m}"),
        }
    }
}

fn data_err(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Provenance record written next to every command's outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config: serde_json::Value,
    pub version: String,
    pub seed: Option<u64>,
    /// `sha256` of the input file, when there is one.
    pub input_sha256: Option<String>,
    /// Output file names with their `sha256`.
    pub outputs: Vec<(String, String)>,
    pub started_unix: u64,
    pub finished_unix: u64,
}

fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs())
}

fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| data_err(format!("{}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(dir).map_err(|e| data_err(format!("{}: {e}", dir.display())))?;
        Ok(Outputs { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn write(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> Result<(), String>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| data_err(format!("{}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        f(&mut w).map_err(CliError::Data)?;
        w.flush().map_err(data_err)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn finish(
        self,
        command: &str,
        config: serde_json::Value,
        seed: Option<u64>,
        input: Option<&Path>,
        started: u64,
    ) -> Result<(), CliError> {
        let outputs = self
            .files
            .iter()
            .map(|f| Ok((f.clone(), sha256_file(&self.dir.join(f))?)))
            .collect::<Result<Vec<_>, CliError>>()?;
        let manifest = RunManifest {
            command: command.to_string(),
            config,
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            input_sha256: input.map(sha256_file).transpose()?,
            outputs,
            started_unix: started,
            finished_unix: unix_now(),
        };
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest).map_err(data_err)?;
        fs::write(&path, text + "\n").map_err(|e| data_err(format!("{}: {e}", path.display())))
    }
}

fn load(data: &DataArgs) -> Result<(Dataset, ColumnSpec), CliError> {
    let cols = ColumnSpec::new(data.covariates.clone(), data.response.clone());
    let ds = load_dataset(&data.input, &cols).map_err(|e| data_err(format!("{}: {e}", data.input.display())))?;
    Ok((ds, cols))
}

fn build_propensity(arg: PropensityArg, ds: &Dataset, floor: f64) -> Result<PropensityModel, CliError> {
    let model = match arg {
        PropensityArg::KnownM1 => PropensityModel::known(MissingModel::M1),
        PropensityArg::KnownM2 => PropensityModel::known(MissingModel::M2),
        PropensityArg::KnownM3 => PropensityModel::known(MissingModel::M3),
        PropensityArg::KnownM4 => PropensityModel::known(MissingModel::M4),
        PropensityArg::Logistic => fit_propensity_logistic(ds).map_err(data_err)?,
        PropensityArg::Kernel => fit_propensity_kernel(ds, silverman_propensity_bandwidth(ds)).map_err(data_err)?,
    };
    model.with_clamp_floor(floor).map_err(|e| usage(e.to_string()))
}

struct Unit;

impl Propensity for Unit {
    fn probability(&self, _x: &[f64]) -> Result<f64, PropensityError> {
        Ok(1.0)
    }
}

fn fit_mesh(ds: &Dataset, m: usize) -> Result<Vec<Vec<f64>>, CliError> {
    if m == 0 {
        return Err(usage("--mesh must be positive"));
    }
    if ds.dim() == 1 {
        let (lo, hi) = ds.covariate_range(0);
        Ok(equispaced_mesh(m, lo, hi))
    } else {
        Ok((0..ds.len()).map(|i| ds.x(i).to_vec()).collect())
    }
}

fn write_curve<W: Write>(w: W, curve: &ModalCurve, tag: &str) -> Result<(), String> {
    let mut wtr = csv::Writer::from_writer(w);
    let d = curve.mesh.first().map_or(1, Vec::len);
    let mut header: Vec<String> = if d == 1 { vec!["x".into()] } else { (1..=d).map(|k| format!("x{k}")).collect() };
    header.extend(["mode", "density", "estimator"].map(String::from));
    wtr.write_record(&header).map_err(|e| e.to_string())?;
    for set in &curve.sets {
        let xs: Vec<String> = set.x.iter().map(|&v| sig6(v)).collect();
        if set.is_empty() {
            let mut rec = xs.clone();
            rec.extend(["NA".to_string(), "NA".to_string(), tag.to_string()]);
            wtr.write_record(&rec).map_err(|e| e.to_string())?;
        }
        for (m, f) in set.modes.iter().zip(&set.densities) {
            let mut rec = xs.clone();
            rec.extend([sig6(*m), sig6(*f), tag.to_string()]);
            wtr.write_record(&rec).map_err(|e| e.to_string())?;
        }
    }
    wtr.flush().map_err(|e| e.to_string())
}

fn bandwidth_pair(h1: Option<f64>, h2: Option<f64>) -> Result<Option<Bandwidths>, CliError> {
    match (h1, h2) {
        (Some(a), Some(b)) => Bandwidths::new(a, b).map(Some).map_err(|e| usage(e.to_string())),
        (None, None) => Ok(None),
        _ => Err(usage("give both --h1 and --h2, or neither")),
    }
}

fn cmd_fit(a: &FitArgs) -> Result<(), CliError> {
    let started = unix_now();
    let kind: EstimatorKind = a.estimator.into();
    if kind == EstimatorKind::Ipw && a.propensity.is_none() {
        return Err(usage("--estimator w needs --propensity"));
    }
    if kind == EstimatorKind::MultipleImputation && a.imputations < 2 {
        return Err(usage("--imputations must be at least 2"));
    }
    let fixed = bandwidth_pair(a.h1, a.h2)?;
    let (ds, _) = load(&a.data)?;
    let cfg = a.engine.config();
    let propensity = a.propensity.map(|p| build_propensity(p, &ds, a.clamp_floor)).transpose()?;
    let bw = match fixed {
        Some(bw) => bw,
        None => {
            let grid = BandwidthGrid::default_for(&ds).map_err(data_err)?;
            let w = CovariateWeight::central_region(&ds);
            let p: &dyn Propensity = match &propensity {
                Some(m) => m,
                None if ds.is_complete() => &Unit,
                None => return Err(usage("cross-validation on incomplete data needs --propensity")),
            };
            select_bandwidths(&ds, p, &grid, &w, &cfg).map_err(data_err)?.0
        }
    };
    let mesh = fit_mesh(&ds, a.mesh)?;
    let curve = match kind {
        EstimatorKind::Complete | EstimatorKind::Simplified | EstimatorKind::Ipw => {
            let w = weights_for(kind, &ds, propensity.as_ref().map(|m| m as &dyn Propensity)).map_err(data_err)?;
            modal_curve(&ds, &w, bw, &mesh, &cfg).map_err(data_err)?
        }
        EstimatorKind::SingleImputation => {
            let filled = impute_single(&ds, bw, &cfg).map_err(data_err)?.completed();
            modal_curve(&filled, &WeightVector::ones(&filled).map_err(data_err)?, bw, &mesh, &cfg).map_err(data_err)?
        }
        EstimatorKind::MultipleImputation => multiple_imputation_curve(
            &ds,
            bw,
            &cfg,
            a.imputations,
            &mesh,
            SeedStream::new(a.seed),
            &PoolConfig::default(),
        )
        .map_err(data_err)?,
    };
    let mut out = Outputs::new(&a.data.out)?;
    out.write("curve.csv", |w| write_curve(w, &curve, kind.tag()))?;
    let config = json!({
        "input": a.data.input,
        "covariates": a.data.covariates,
        "response": a.data.response,
        "estimator": kind,
        "bandwidths": bw,
        "bandwidths_from": if fixed.is_some() { "flags" } else { "cross-validation" },
        "mesh": a.mesh,
        "propensity": propensity.as_ref().map(|m| m.label()),
        "clamp_floor": a.clamp_floor,
        "imputations": a.imputations,
        "meanshift": cfg,
        "pool": PoolConfig::default(),
    });
    out.finish("fit", config, Some(a.seed), Some(&a.data.input), started)
}

fn cmd_impute(a: &ImputeArgs) -> Result<(), CliError> {
    let started = unix_now();
    let bw = Bandwidths::new(a.h1, a.h2).map_err(|e| usage(e.to_string()))?;
    let (ds, cols) = load(&a.data)?;
    let cfg = a.engine.config();
    let imputed = match a.method {
        ImputeMethod::Single => impute_single(&ds, bw, &cfg),
        ImputeMethod::Draw => impute_random_draw(&ds, bw, &cfg, SeedStream::new(a.seed)),
    }
    .map_err(data_err)?;
    let mut out = Outputs::new(&a.data.out)?;
    out.write("imputed.csv", |w| {
        write_dataset(&mut *w, &imputed.completed(), &cols).map_err(|e| e.to_string())
    })?;
    out.write("provenance.csv", |w| {
        writeln!(w, "row,provenance").map_err(|e| e.to_string())?;
        for (i, p) in imputed.provenance.iter().enumerate() {
            let tag = if *p == Provenance::Observed { "observed" } else { "imputed" };
            writeln!(w, "{i},{tag}").map_err(|e| e.to_string())?;
        }
        Ok(())
    })?;
    let config = json!({
        "input": a.data.input,
        "covariates": a.data.covariates,
        "response": a.data.response,
        "method": format!("{:?}", a.method).to_lowercase(),
        "bandwidths": bw,
        "meanshift": cfg,
    });
    out.finish("impute", config, Some(a.seed), Some(&a.data.input), started)
}

fn cmd_bandwidth(a: &BandwidthArgs) -> Result<(), CliError> {
    let started = unix_now();
    let (ds, _) = load(&a.data)?;
    let cfg = a.engine.config();
    let grid = match (&a.h1_grid, &a.h2_grid) {
        (None, None) => BandwidthGrid::default_for(&ds).map_err(data_err)?,
        (Some(h1), Some(h2)) => BandwidthGrid::new(h1.clone(), h2.clone()).map_err(|e| usage(e.to_string()))?,
        _ => return Err(usage("give both --h1-grid and --h2-grid, or neither")),
    };
    let propensity = a.propensity.map(|p| build_propensity(p, &ds, a.clamp_floor)).transpose()?;
    let p: &dyn Propensity = match &propensity {
        Some(m) => m,
        None if ds.is_complete() => &Unit,
        None => return Err(usage("incomplete data needs --propensity")),
    };
    let w = match a.weight {
        WeightArg::Central => CovariateWeight::central_region(&ds),
        WeightArg::One => CovariateWeight::One,
    };
    let (bw, table) = select_bandwidths(&ds, p, &grid, &w, &cfg).map_err(data_err)?;
    let best = *table.argmin().expect("selection succeeded");
    let mut out = Outputs::new(&a.data.out)?;
    out.write("scores.csv", |wr| table.write_csv(&mut *wr).map_err(|e| e.to_string()))?;
    println!("{}", json!({ "h1": bw.h1(), "h2": bw.h2(), "cv": best.cv }));
    let config = json!({
        "input": a.data.input,
        "covariates": a.data.covariates,
        "response": a.data.response,
        "grid": grid,
        "propensity": propensity.as_ref().map_or_else(|| "none".to_string(), |m| m.label()),
        "clamp_floor": a.clamp_floor,
        "weight": w,
        "meanshift": cfg,
    });
    out.finish("bandwidth", config, None, Some(&a.data.input), started)
}

fn cmd_simulate(a: &SimulateArgs) -> Result<(), CliError> {
    let started = unix_now();
    if a.replicates == 0 {
        return Err(usage("--replicates must be positive"));
    }
    let k = a.k.unwrap_or(if a.scenario == 2 { SCENARIO2_K } else { 0.5 });
    let spec = ScenarioSpec::new(a.scenario, k, a.a, a.n).map_err(|e| usage(e.to_string()))?;
    let policy = match a.cv {
        CvArg::Pilot => BandwidthPolicy::CvPilot,
        CvArg::PerReplicate => BandwidthPolicy::CvPerReplicate,
        CvArg::Fixed => match bandwidth_pair(a.h1, a.h2)? {
            Some(bw) => BandwidthPolicy::Fixed { h1: bw.h1(), h2: bw.h2() },
            None => return Err(usage("--cv fixed needs --h1 and --h2")),
        },
    };
    let mode = match a.propensity_mode {
        PropensityModeArg::Known => PropensityMode::Known,
        PropensityModeArg::Logistic => PropensityMode::Logistic,
        PropensityModeArg::Kernel => PropensityMode::Kernel,
    };
    let mut estimators: Vec<EstimatorKind> = a.estimators.iter().map(|&e| e.into()).collect();
    estimators.sort();
    estimators.dedup();
    let configs: Vec<ExperimentConfig> = a
        .missing
        .iter()
        .map(|m| {
            let model = match m {
                MissingArg::M1 => Some(MissingModel::M1),
                MissingArg::M2 => Some(MissingModel::M2),
                MissingArg::M3 => Some(MissingModel::M3),
                MissingArg::M4 => Some(MissingModel::M4),
                MissingArg::None => None,
            };
            let mut cfg = ExperimentConfig::new(spec, model, a.seed);
            cfg.estimators = estimators.clone();
            cfg.replicates = a.replicates;
            cfg.mesh_size = a.mesh;
            cfg.bandwidth_policy = policy;
            cfg.propensity_mode = mode;
            cfg.imputations = a.imputations;
            cfg.meanshift = a.engine.config();
            cfg
        })
        .collect();
    for cfg in &configs {
        cfg.validate().map_err(|e| usage(e.to_string()))?;
    }
    let results = configs.iter().map(run_experiment).collect::<Result<Vec<_>, _>>().map_err(data_err)?;
    let mut out = Outputs::new(&a.out)?;
    out.write("summary.csv", |w| write_summary_csv(&results, &mut *w).map_err(|e| e.to_string()))?;
    out.write("long.csv", |w| write_long_csv(&results, &mut *w).map_err(|e| e.to_string()))?;
    out.write("results.json", |w| {
        serde_json::to_writer_pretty(&mut *w, &results).map_err(|e| e.to_string())?;
        writeln!(w).map_err(|e| e.to_string())
    })?;
    let config = serde_json::to_value(&configs).map_err(data_err)?;
    out.finish("simulate", config, Some(a.seed), None, started)
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(usage("--threads must be positive"));
        }
        // A second call in the same process keeps the first pool, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Impute(a) => cmd_impute(a),
        Command::Bandwidth(a) => cmd_bandwidth(a),
        Command::Simulate(a) => cmd_simulate(a),
    }
}
