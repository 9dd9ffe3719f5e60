//! Conditional mean-shift: the fixed-point iteration
//!
//! ```text
//! y ← Σ w_i Y_i K1_i K2((y − Y_i)/h2) / Σ w_i K1_i K2((y − Y_i)/h2)
//! ```
//!
//! run from a ladder of starting values at each covariate point. The weight
//! vector selects the estimator; the iteration itself is shared.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::kernel_density::{Bandwidths, CovariateSlice, KdeError, WeightVector};
use crate::stats::linspace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeanShiftError {
    #[error(transparent)]
    Kde(#[from] KdeError),
    #[error("mean-shift stalled at y = {y}: no kernel mass")]
    Stall { y: f64 },
    #[error("no starting point converged")]
    EmptyModalSet,
    #[error("invalid mean-shift configuration: {0}")]
    InvalidConfig(String),
    #[error("mesh is empty")]
    EmptyMesh,
}

/// An ascent also keeps going until its step is below
/// `STATIONARITY · h2²`. The step equals `h2² ∂f/∂y / f`, so this bounds the
/// relative density gradient at the reported mode.
pub const STATIONARITY: f64 = 5e-6;

/// Convergence threshold on `|y_{t+1} − y_t|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tolerance {
    Absolute(f64),
    /// Fraction of the observed response range.
    RelativeToRange(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartRange {
    /// `[min observed Y, max observed Y]`.
    DataRange,
    Fixed { low: f64, high: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeanShiftConfig {
    pub tol: Tolerance,
    pub max_iter: usize,
    /// Endpoints closer than this collapse into one mode; `None` means `h2 / 2`.
    pub merge_tol: Option<f64>,
    pub n_starts: usize,
    pub start_range: StartRange,
}

impl Default for MeanShiftConfig {
    fn default() -> Self {
        MeanShiftConfig {
            tol: Tolerance::RelativeToRange(1e-6),
            max_iter: 500,
            merge_tol: None,
            n_starts: 30,
            start_range: StartRange::DataRange,
        }
    }
}

/// A configuration with every data-dependent default filled in.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Resolved {
    pub tol: f64,
    pub max_iter: usize,
    pub merge_tol: f64,
    pub starts: Vec<f64>,
}

impl MeanShiftConfig {
    pub(crate) fn resolve(&self, ds: &Dataset, bw: Bandwidths) -> Result<Resolved, MeanShiftError> {
        if self.n_starts < 2 {
            return Err(MeanShiftError::InvalidConfig(format!("n_starts = {} < 2", self.n_starts)));
        }
        if self.max_iter == 0 {
            return Err(MeanShiftError::InvalidConfig("max_iter must be positive".into()));
        }
        let (lo, hi) = ds.observed_range();
        let tol = match self.tol {
            Tolerance::Absolute(t) => t,
            // A constant response has zero range; fall back to the bandwidth scale.
            Tolerance::RelativeToRange(r) => r * if hi > lo { hi - lo } else { bw.h2() },
        };
        let merge_tol = self.merge_tol.unwrap_or(0.5 * bw.h2());
        if !(tol > 0.0 && tol < merge_tol) {
            return Err(MeanShiftError::InvalidConfig(format!(
                "need 0 < tol < merge_tol, got tol = {tol}, merge_tol = {merge_tol}"
            )));
        }
        Ok(Resolved {
            tol: tol.min(STATIONARITY * bw.h2() * bw.h2()),
            max_iter: self.max_iter,
            merge_tol,
            starts: starting_points(ds, self),
        })
    }
}

/// One update of the weighted conditional mean-shift.
pub fn mean_shift_step(
    ds: &Dataset,
    w: &WeightVector,
    bw: Bandwidths,
    x: &[f64],
    y: f64,
) -> Result<f64, MeanShiftError> {
    CovariateSlice::new(ds, w, bw, x)?.mean_shift_target(y).ok_or(MeanShiftError::Stall { y })
}

/// Result of one ascent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ascent {
    pub y: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub(crate) fn ascend_slice(
    slice: &CovariateSlice,
    y0: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Ascent, MeanShiftError> {
    let mut y = y0;
    for t in 1..=max_iter {
        let next = slice.mean_shift_target(y).ok_or(MeanShiftError::Stall { y })?;
        if (next - y).abs() < tol {
            return Ok(Ascent { y: next, iterations: t, converged: true });
        }
        y = next;
    }
    Ok(Ascent { y, iterations: max_iter, converged: false })
}

/// Iterates the update from `y0` until successive iterates differ by less
/// than the tolerance (and [`STATIONARITY`]` · h2²`) or `max_iter` updates
/// have been made.
pub fn ascend(
    ds: &Dataset,
    w: &WeightVector,
    bw: Bandwidths,
    x: &[f64],
    y0: f64,
    cfg: &MeanShiftConfig,
) -> Result<Ascent, MeanShiftError> {
    let r = cfg.resolve(ds, bw)?;
    let slice = CovariateSlice::new(ds, w, bw, x)?;
    ascend_slice(&slice, y0, r.tol, r.max_iter)
}

/// `n_starts` equispaced values over the configured start range.
pub fn starting_points(ds: &Dataset, cfg: &MeanShiftConfig) -> Vec<f64> {
    let (lo, hi) = match cfg.start_range {
        StartRange::DataRange => ds.observed_range(),
        StartRange::Fixed { low, high } => (low, high),
    };
    linspace(lo, hi, cfg.n_starts)
}

/// Estimated local conditional modes at one covariate point, ascending,
/// with the joint density at each.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalSet {
    pub x: Vec<f64>,
    pub modes: Vec<f64>,
    pub densities: Vec<f64>,
}

impl ModalSet {
    pub fn empty(x: Vec<f64>) -> Self {
        ModalSet { x, modes: Vec::new(), densities: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }
}

/// Sorts `(value, density)` endpoints and merges runs whose consecutive gaps
/// are at most `merge_tol`, keeping the densest member of each run.
pub(crate) fn merge_endpoints(mut endpoints: Vec<(f64, f64)>, merge_tol: f64) -> (Vec<f64>, Vec<f64>) {
    endpoints.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut modes: Vec<f64> = Vec::new();
    let mut densities: Vec<f64> = Vec::new();
    let mut last: Option<f64> = None;
    for (y, f) in endpoints {
        match last {
            Some(prev) if y - prev <= merge_tol => {
                let k = densities.len() - 1;
                if f > densities[k] {
                    modes[k] = y;
                    densities[k] = f;
                }
            }
            _ => {
                modes.push(y);
                densities.push(f);
            }
        }
        last = Some(y);
    }
    (modes, densities)
}

pub(crate) fn modal_set_on_slice(
    slice: &CovariateSlice,
    x: &[f64],
    r: &Resolved,
) -> Result<ModalSet, MeanShiftError> {
    let mut endpoints = Vec::with_capacity(r.starts.len());
    for &y0 in &r.starts {
        match ascend_slice(slice, y0, r.tol, r.max_iter) {
            Ok(a) if a.converged => endpoints.push((a.y, slice.density(a.y))),
            // Stalled and unconverged starts are not verified stationary points.
            Ok(_) | Err(MeanShiftError::Stall { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    if endpoints.is_empty() {
        return Err(MeanShiftError::EmptyModalSet);
    }
    let (modes, densities) = merge_endpoints(endpoints, r.merge_tol);
    Ok(ModalSet { x: x.to_vec(), modes, densities })
}

pub fn modal_set(
    ds: &Dataset,
    w: &WeightVector,
    bw: Bandwidths,
    x: &[f64],
    cfg: &MeanShiftConfig,
) -> Result<ModalSet, MeanShiftError> {
    let r = cfg.resolve(ds, bw)?;
    let slice = CovariateSlice::new(ds, w, bw, x)?;
    modal_set_on_slice(&slice, x, &r)
}

/// Modal sets over a mesh of covariate points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalCurve {
    pub mesh: Vec<Vec<f64>>,
    pub sets: Vec<ModalSet>,
}

impl ModalCurve {
    pub fn len(&self) -> usize {
        self.mesh.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mesh.is_empty()
    }

    /// Mesh points where no start converged.
    pub fn empty_points(&self) -> usize {
        self.sets.iter().filter(|s| s.is_empty()).count()
    }
}

/// Runs [`modal_set`] at each mesh point. Points where nothing converged get
/// an empty set instead of failing the whole curve.
pub fn modal_curve(
    ds: &Dataset,
    w: &WeightVector,
    bw: Bandwidths,
    mesh: &[Vec<f64>],
    cfg: &MeanShiftConfig,
) -> Result<ModalCurve, MeanShiftError> {
    if mesh.is_empty() {
        return Err(MeanShiftError::EmptyMesh);
    }
    let r = cfg.resolve(ds, bw)?;
    let sets = mesh
        .par_iter()
        .map(|x| {
            let slice = CovariateSlice::new(ds, w, bw, x)?;
            match modal_set_on_slice(&slice, x, &r) {
                Err(MeanShiftError::EmptyModalSet) => Ok(ModalSet::empty(x.clone())),
                other => other,
            }
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ModalCurve { mesh: mesh.to_vec(), sets })
}

/// `m` equispaced one-dimensional mesh points on `[lo, hi]`.
pub fn equispaced_mesh(m: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    linspace(lo, hi, m).into_iter().map(|v| vec![v]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel_density::{density_y_gradient, joint_density};

    fn bw(h1: f64, h2: f64) -> Bandwidths {
        Bandwidths::new(h1, h2).unwrap()
    }

    #[test]
    fn single_point_step() {
        let ds = Dataset::from_xy(&[0.5], &[3.0]).unwrap();
        let w = WeightVector::ones(&ds).unwrap();
        for y0 in [-10.0, 0.0, 3.0, 8.0] {
            assert_eq!(mean_shift_step(&ds, &w, bw(0.1, 0.5), &[0.5], y0).unwrap(), 3.0);
        }
    }

    #[test]
    fn symmetric_pair_fixed_point() {
        let ds = Dataset::from_xy(&[0.5, 0.5], &[0.0, 1.0]).unwrap();
        let w = WeightVector::ones(&ds).unwrap();
        assert_eq!(mean_shift_step(&ds, &w, bw(0.1, 0.3), &[0.5], 0.5).unwrap(), 0.5);
    }

    #[test]
    fn start_at_fixed_point_converges_immediately() {
        let ds = Dataset::from_xy(&[0.5], &[3.0]).unwrap();
        let w = WeightVector::ones(&ds).unwrap();
        let cfg = MeanShiftConfig { tol: Tolerance::Absolute(1e-9), ..Default::default() };
        let a = ascend(&ds, &w, bw(0.1, 0.5), &[0.5], 3.0, &cfg).unwrap();
        assert_eq!(a, Ascent { y: 3.0, iterations: 1, converged: true });
    }

    #[test]
    fn max_iter_reports_not_converged() {
        let ds = Dataset::from_xy(&[0.0, 0.0], &[0.0, 10.0]).unwrap();
        let w = WeightVector::ones(&ds).unwrap();
        let cfg = MeanShiftConfig { max_iter: 1, tol: Tolerance::Absolute(1e-12), ..Default::default() };
        let a = ascend(&ds, &w, bw(1.0, 1.0), &[0.0], 2.0, &cfg).unwrap();
        assert!(!a.converged);
        assert_eq!(a.iterations, 1);
    }

    #[test]
    fn starting_point_ladders() {
        let ds = Dataset::from_xy(&[0.0, 1.0], &[-1.5, 3.5]).unwrap();
        let cfg = MeanShiftConfig { n_starts: 2, ..Default::default() };
        assert_eq!(starting_points(&ds, &cfg), vec![-1.5, 3.5]);
        let cfg = MeanShiftConfig {
            n_starts: 3,
            start_range: StartRange::Fixed { low: 0.0, high: 1.0 },
            ..Default::default()
        };
        assert_eq!(starting_points(&ds, &cfg), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn merging_keeps_densest_member() {
        let (m, d) = merge_endpoints(vec![(3.0000004, 0.2), (3.0, 0.3), (5.0, 0.1)], 1e-3);
        assert_eq!(m, vec![3.0, 5.0]);
        assert_eq!(d, vec![0.3, 0.1]);
    }

    #[test]
    fn two_clusters_two_modes() {
        let x: Vec<f64> = vec![0.5; 40];
        let y: Vec<f64> = (0..40).map(|i| if i < 20 { -2.0 } else { 2.0 } + 0.01 * (i % 5) as f64).collect();
        let ds = Dataset::from_xy(&x, &y).unwrap();
        let w = WeightVector::ones(&ds).unwrap();
        let ms = modal_set(&ds, &w, bw(0.1, 0.3), &[0.5], &MeanShiftConfig::default()).unwrap();
        assert_eq!(ms.len(), 2);
        assert!((ms.modes[0] + 1.98).abs() < 1e-3 && (ms.modes[1] - 2.02).abs() < 1e-3);
        for (&m, &f) in ms.modes.iter().zip(&ms.densities) {
            assert_eq!(f, joint_density(&ds, &w, bw(0.1, 0.3), &[0.5], m).unwrap());
            let g = density_y_gradient(&ds, &w, bw(0.1, 0.3), &[0.5], m).unwrap();
            assert!(g.abs() < 1e-5 * f);
        }
    }

    #[test]
    fn huge_h2_single_mode() {
        let x: Vec<f64> = vec![0.5; 40];
        let y: Vec<f64> = (0..40).map(|i| if i < 20 { -2.0 } else { 2.0 }).collect();
        let ds = Dataset::from_xy(&x, &y).unwrap();
        let w = WeightVector::ones(&ds).unwrap();
        let ms = modal_set(&ds, &w, bw(0.1, 20.0), &[0.5], &MeanShiftConfig::default()).unwrap();
        assert_eq!(ms.len(), 1);
    }

    #[test]
    fn invalid_configs() {
        let ds = Dataset::from_xy(&[0.0, 1.0], &[0.0, 1.0]).unwrap();
        let w = WeightVector::ones(&ds).unwrap();
        let bad = MeanShiftConfig { n_starts: 1, ..Default::default() };
        assert!(matches!(modal_set(&ds, &w, bw(0.1, 0.1), &[0.0], &bad), Err(MeanShiftError::InvalidConfig(_))));
        let bad = MeanShiftConfig { tol: Tolerance::Absolute(1.0), merge_tol: Some(0.5), ..Default::default() };
        assert!(matches!(modal_set(&ds, &w, bw(0.1, 0.1), &[0.0], &bad), Err(MeanShiftError::InvalidConfig(_))));
        assert_eq!(modal_curve(&ds, &w, bw(0.1, 0.1), &[], &MeanShiftConfig::default()), Err(MeanShiftError::EmptyMesh));
    }

    #[test]
    fn unconverged_everywhere_is_empty_set() {
        let ds = Dataset::from_xy(&[0.0, 0.0], &[0.0, 10.0]).unwrap();
        let w = WeightVector::ones(&ds).unwrap();
        let cfg = MeanShiftConfig { max_iter: 1, ..Default::default() };
        let b = bw(1.0, 3.0);
        assert_eq!(modal_set(&ds, &w, b, &[0.0], &cfg), Err(MeanShiftError::EmptyModalSet));
        let curve = modal_curve(&ds, &w, b, &[vec![0.0]], &cfg).unwrap();
        assert_eq!(curve.empty_points(), 1);
    }

    #[test]
    fn curve_of_one_point_is_modal_set() {
        let ds = Dataset::from_xy(&[0.1, 0.4, 0.5, 0.9], &[1.0, 0.0, 2.0, 1.5]).unwrap();
        let w = WeightVector::ones(&ds).unwrap();
        let cfg = MeanShiftConfig::default();
        let c = modal_curve(&ds, &w, bw(0.2, 0.4), &[vec![0.45]], &cfg).unwrap();
        assert_eq!(c.sets[0], modal_set(&ds, &w, bw(0.2, 0.4), &[0.45], &cfg).unwrap());
    }
}
