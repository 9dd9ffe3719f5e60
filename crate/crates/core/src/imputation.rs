//! Filling missing responses with conditional modes.
//!
//! Single imputation replaces each missing `Y_i` by the mode of the
//! complete-case conditional density at `X_i` with the highest density.
//! Multiple imputation draws one mode per missing row, with probability
//! proportional to its conditional density, `B` times; runs the
//! complete-data estimator on each completed sample; and merges the `B`
//! modal sets found at every mesh point.
//!
//! The merge smooths the pooled modes with a one-dimensional Gaussian KDE,
//! finds its local maxima by mean-shift from every pooled value, drops
//! maxima whose height is below `prune_fraction` of the tallest, and
//! reports for each surviving maximum the pooled value of highest density
//! in its basin. Reporting a pooled value rather than the KDE maximum makes
//! the merge idempotent under duplication: `B` copies of one set give that
//! set back.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{Dataset, DatasetError};
use crate::kernel_density::{Bandwidths, CovariateSlice, KdeError, WeightVector, FRAC_1_SQRT_2PI};
use crate::meanshift::{merge_endpoints, modal_curve, modal_set_on_slice, MeanShiftConfig, MeanShiftError, ModalCurve, ModalSet};
use crate::rng::SeedStream;
use crate::stats::silverman_bandwidth;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImputationError {
    #[error("row {row}: no conditional mode found to impute from")]
    EmptyModalSet { row: usize },
    #[error("multiple imputation needs at least 2 imputations, got {0}")]
    TooFewImputations(usize),
    #[error(transparent)]
    MeanShift(#[from] MeanShiftError),
    #[error(transparent)]
    Kde(#[from] KdeError),
    #[error("{0}")]
    Dataset(String),
}

impl From<DatasetError> for ImputationError {
    fn from(e: DatasetError) -> Self {
        ImputationError::Dataset(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Observed,
    Imputed,
}

/// A dataset whose missing responses have been filled.
#[derive(Debug, Clone, PartialEq)]
pub struct ImputedDataset {
    pub base: Dataset,
    pub filled_y: Vec<f64>,
    pub provenance: Vec<Provenance>,
}

impl ImputedDataset {
    /// The filled sample as a complete dataset.
    pub fn completed(&self) -> Dataset {
        self.base.with_responses(&self.filled_y).expect("filled responses are finite")
    }

    fn from_fills(ds: &Dataset, fills: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut filled_y: Vec<f64> = ds.responses().iter().map(|v| v.unwrap_or(f64::NAN)).collect();
        for (row, value) in fills {
            filled_y[row] = value;
        }
        let provenance = (0..ds.len())
            .map(|i| if ds.delta(i) { Provenance::Observed } else { Provenance::Imputed })
            .collect();
        ImputedDataset { base: ds.clone(), filled_y, provenance }
    }
}

/// Complete-case modal set at a missing row, with the conditional density of
/// each mode.
#[derive(Debug, Clone)]
struct RowModes {
    row: usize,
    modes: Vec<f64>,
    conditional: Vec<f64>,
}

fn missing_row_modes(ds: &Dataset, bw: Bandwidths, cfg: &MeanShiftConfig) -> Result<Vec<RowModes>, ImputationError> {
    let w = WeightVector::observed(ds);
    let r = cfg.resolve(ds, bw)?;
    let rows: Vec<usize> = (0..ds.len()).filter(|&i| !ds.delta(i)).collect();
    rows.par_iter()
        .map(|&row| {
            let x = ds.x(row);
            let slice = CovariateSlice::new(ds, &w, bw, x)?;
            let set = match modal_set_on_slice(&slice, x, &r) {
                Err(MeanShiftError::EmptyModalSet) => return Err(ImputationError::EmptyModalSet { row }),
                other => other?,
            };
            let conditional = set
                .modes
                .iter()
                .map(|&m| slice.conditional_density(m))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(RowModes { row, modes: set.modes, conditional })
        })
        .collect()
}

fn argmax_mode(r: &RowModes) -> f64 {
    let mut best = 0;
    for j in 1..r.modes.len() {
        if r.conditional[j] > r.conditional[best] {
            best = j;
        }
    }
    r.modes[best]
}

/// Picks one of `values` with probability proportional to `weights`, using
/// `stream` as the only source of randomness. Falls back to the heaviest
/// value when the weights are all zero.
pub fn draw_proportional(values: &[f64], weights: &[f64], stream: SeedStream) -> f64 {
    if values.len() == 1 {
        return values[0];
    }
    match WeightedIndex::new(weights) {
        Ok(dist) => values[dist.sample(&mut stream.rng())],
        Err(_) => {
            let best = (0..values.len()).fold(0, |b, j| if weights[j] > weights[b] { j } else { b });
            values[best]
        }
    }
}

fn draw_mode(r: &RowModes, stream: SeedStream) -> f64 {
    draw_proportional(&r.modes, &r.conditional, stream.child(r.row as u64))
}

/// Fills every missing response with its highest-conditional-density mode.
pub fn impute_single(ds: &Dataset, bw: Bandwidths, cfg: &MeanShiftConfig) -> Result<ImputedDataset, ImputationError> {
    let rows = missing_row_modes(ds, bw, cfg)?;
    Ok(ImputedDataset::from_fills(ds, rows.iter().map(|r| (r.row, argmax_mode(r)))))
}

/// Fills every missing response with one mode drawn with probability
/// proportional to its conditional density. Row `i` uses sub-stream
/// `stream.child(i)`.
pub fn impute_random_draw(
    ds: &Dataset,
    bw: Bandwidths,
    cfg: &MeanShiftConfig,
    stream: SeedStream,
) -> Result<ImputedDataset, ImputationError> {
    let rows = missing_row_modes(ds, bw, cfg)?;
    Ok(ImputedDataset::from_fills(ds, rows.iter().map(|r| (r.row, draw_mode(r, stream)))))
}

/// Modes gathered from several modal sets at one covariate point.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledModes {
    pub x: Vec<f64>,
    pub values: Vec<f64>,
}

impl PooledModes {
    pub fn from_sets<'a>(x: Vec<f64>, sets: impl IntoIterator<Item = &'a ModalSet>) -> Self {
        let values = sets.into_iter().flat_map(|s| s.modes.iter().copied()).collect();
        PooledModes { x, values }
    }
}

/// Settings of the pooled-mode merge.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolConfig {
    /// Pooled-KDE bandwidth; `None` applies Silverman's rule to the pool.
    pub bandwidth: Option<f64>,
    /// Maxima lower than this fraction of the tallest one are dropped.
    pub prune_fraction: f64,
    /// Maxima closer than this are one mode; `None` means half the bandwidth.
    pub merge_tol: Option<f64>,
}

impl Default for PoolConfig {
    fn default() -> Self {
        PoolConfig { bandwidth: None, prune_fraction: 0.1, merge_tol: None }
    }
}

fn pooled_density(values: &[f64], h: f64, y: f64) -> f64 {
    let s: f64 = values.iter().map(|v| {
        let u = (y - v) / h;
        (-0.5 * u * u).exp()
    }).sum();
    s * FRAC_1_SQRT_2PI / (h * values.len() as f64)
}

fn pooled_ascent(values: &[f64], h: f64, y0: f64, tol: f64) -> f64 {
    let inv = 0.5 / (h * h);
    let mut y = y0;
    for _ in 0..1000 {
        let top = values.iter().map(|v| -(y - v) * (y - v) * inv).fold(f64::NEG_INFINITY, f64::max);
        let (num, den) = values.iter().fold((0.0, 0.0), |(n, d), v| {
            let k = (-(y - v) * (y - v) * inv - top).exp();
            (n + k * v, d + k)
        });
        let next = num / den;
        if (next - y).abs() < tol {
            return next;
        }
        y = next;
    }
    y
}

/// Merges pooled modes into one modal set (see the module docs).
pub fn combine_modal_sets(pool: &PooledModes, cfg: &PoolConfig) -> ModalSet {
    let values = &pool.values;
    if values.is_empty() {
        return ModalSet::empty(pool.x.clone());
    }
    let h = match cfg.bandwidth {
        Some(h) if h > 0.0 => h,
        _ => {
            let s = silverman_bandwidth(values);
            if s > 0.0 { s } else { 1.0 }
        }
    };
    let merge_tol = cfg.merge_tol.unwrap_or(0.5 * h);
    let tol = 1e-9 * h;

    // (endpoint, member value, density at member, density at endpoint)
    let mut runs: Vec<(f64, f64, f64, f64)> = values
        .iter()
        .map(|&v| {
            let end = pooled_ascent(values, h, v, tol);
            (end, v, pooled_density(values, h, v), pooled_density(values, h, end))
        })
        .collect();
    runs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));

    // Single-linkage clusters of endpoints, as in the conditional engine.
    let mut clusters: Vec<(f64, f64, f64)> = Vec::new(); // (representative, its density, peak height)
    let mut last_end: Option<f64> = None;
    for (end, v, fv, fend) in runs {
        match (last_end, clusters.last_mut()) {
            (Some(prev), Some(c)) if end - prev <= merge_tol => {
                if fv > c.1 || (fv == c.1 && v < c.0) {
                    c.0 = v;
                    c.1 = fv;
                }
                c.2 = c.2.max(fend);
            }
            _ => clusters.push((v, fv, fend)),
        }
        last_end = Some(end);
    }
    let tallest = clusters.iter().map(|c| c.2).fold(0.0, f64::max);
    let survivors: Vec<(f64, f64)> = clusters
        .into_iter()
        .filter(|c| c.2 >= cfg.prune_fraction * tallest)
        .map(|c| (c.0, c.2))
        .collect();
    // Representatives are pooled values; collapse exact duplicates.
    let (modes, densities) = merge_endpoints(survivors, 0.0);
    ModalSet { x: pool.x.clone(), modes, densities }
}

/// Modal curve by multiple imputation with `imputations` completed samples.
/// Imputation `b` draws from `stream.child(b)`.
pub fn multiple_imputation_curve(
    ds: &Dataset,
    bw: Bandwidths,
    cfg: &MeanShiftConfig,
    imputations: usize,
    mesh: &[Vec<f64>],
    stream: SeedStream,
    pool_cfg: &PoolConfig,
) -> Result<ModalCurve, ImputationError> {
    if imputations < 2 {
        return Err(ImputationError::TooFewImputations(imputations));
    }
    if ds.is_complete() {
        // Every completed sample equals the input.
        return Ok(modal_curve(ds, &WeightVector::ones(ds)?, bw, mesh, cfg)?);
    }
    let rows = missing_row_modes(ds, bw, cfg)?;
    let curves = (0..imputations)
        .map(|b| {
            let sub = stream.child(b as u64);
            let filled = ImputedDataset::from_fills(ds, rows.iter().map(|r| (r.row, draw_mode(r, sub))));
            let completed = filled.completed();
            Ok(modal_curve(&completed, &WeightVector::ones(&completed)?, bw, mesh, cfg)?)
        })
        .collect::<Result<Vec<ModalCurve>, ImputationError>>()?;
    let sets = (0..mesh.len())
        .into_par_iter()
        .map(|j| {
            let pool = PooledModes::from_sets(mesh[j].clone(), curves.iter().map(|c| &c.sets[j]));
            combine_modal_sets(&pool, pool_cfg)
        })
        .collect();
    Ok(ModalCurve { mesh: mesh.to_vec(), sets })
}
