//! Bandwidth selection by inverse-probability-weighted cross-validation.
//!
//! For each observed row the criterion removes that row, recomputes the
//! simplified modal set at its covariate and charges
//!
//! ```text
//! d²(M̂₋ᵢ(Xᵢ), Yᵢ) · N²₋ᵢ(Xᵢ) · w(Xᵢ) / p(Xᵢ)
//! ```
//!
//! where `N` is the size of the modal set. The score is the sum over rows
//! divided by `n`, the total number of rows.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::kernel_density::{Bandwidths, CovariateSlice, KdeError, WeightVector};
use crate::meanshift::{modal_set_on_slice, MeanShiftConfig, MeanShiftError};
use crate::metrics::{dist_point_set, FiniteSet};
use crate::missing::{Propensity, PropensityError};
use crate::stats::{quantile_sorted, sig6, sorted, std_dev};

/// Share of skipped leave-one-out terms above which a score is rejected.
pub const MAX_SKIPPED_FRACTION: f64 = 0.2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BandwidthError {
    #[error("cross-validation needs at least 2 observed responses, got {0}")]
    TooFewObserved(usize),
    #[error("unreliable score: {skipped} of {terms} leave-one-out modal sets were empty")]
    Unreliable { skipped: usize, terms: usize },
    #[error("every grid cell gave an unreliable score")]
    AllUnreliable,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Propensity(#[from] PropensityError),
    #[error(transparent)]
    MeanShift(#[from] MeanShiftError),
    #[error(transparent)]
    Kde(#[from] KdeError),
}

/// Candidate values of `h1` and `h2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthGrid {
    h1_values: Vec<f64>,
    h2_values: Vec<f64>,
}

fn check_axis(name: &str, v: &[f64]) -> Result<(), BandwidthError> {
    if v.is_empty() {
        return Err(BandwidthError::InvalidGrid(format!("no {name} values")));
    }
    if v.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
        return Err(BandwidthError::InvalidGrid(format!("{name} values must be positive")));
    }
    if v.windows(2).any(|p| p[0] >= p[1]) {
        return Err(BandwidthError::InvalidGrid(format!("{name} values must be strictly ascending")));
    }
    Ok(())
}

fn steps(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step).round() as usize + 1;
    (0..count).map(|k| lo + step * k as f64).collect()
}

impl BandwidthGrid {
    pub fn new(h1_values: Vec<f64>, h2_values: Vec<f64>) -> Result<Self, BandwidthError> {
        check_axis("h1", &h1_values)?;
        check_axis("h2", &h2_values)?;
        Ok(BandwidthGrid { h1_values, h2_values })
    }

    pub fn single(bw: Bandwidths) -> Self {
        BandwidthGrid { h1_values: vec![bw.h1()], h2_values: vec![bw.h2()] }
    }

    /// `h1 ∈ {0.05, 0.075, …, 0.3} × range(X)` and
    /// `h2 ∈ {0.1, 0.15, …, 0.6} × sd(observed Y)`.
    ///
    /// For multivariate covariates the range is the mean of the coordinate
    /// ranges.
    pub fn default_for(ds: &Dataset) -> Result<Self, BandwidthError> {
        let x_scale = (0..ds.dim())
            .map(|k| {
                let (lo, hi) = ds.covariate_range(k);
                hi - lo
            })
            .sum::<f64>()
            / ds.dim() as f64;
        let y_scale = std_dev(&ds.observed_responses());
        if !(x_scale > 0.0 && y_scale > 0.0) {
            return Err(BandwidthError::InvalidGrid(
                "covariate range and response spread must be positive".into(),
            ));
        }
        Self::new(
            steps(0.05, 0.3, 0.025).into_iter().map(|f| f * x_scale).collect(),
            steps(0.1, 0.6, 0.05).into_iter().map(|f| f * y_scale).collect(),
        )
    }

    pub fn h1_values(&self) -> &[f64] {
        &self.h1_values
    }

    pub fn h2_values(&self) -> &[f64] {
        &self.h2_values
    }

    /// Cells in `h1`-major order.
    pub fn cells(&self) -> Vec<Bandwidths> {
        self.h1_values
            .iter()
            .flat_map(|&h1| self.h2_values.iter().map(move |&h2| Bandwidths::new(h1, h2).expect("validated")))
            .collect()
    }
}

/// The covariate weight `w(x)` of the criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovariateWeight {
    One,
    /// Indicator of the box `low ≤ x ≤ high`, coordinate-wise.
    Box { low: Vec<f64>, high: Vec<f64> },
    Scaled(f64, Box<CovariateWeight>),
}

impl CovariateWeight {
    /// Indicator of the region between the 5th and 95th percentiles of each
    /// covariate coordinate.
    pub fn central_region(ds: &Dataset) -> Self {
        let (low, high) = (0..ds.dim())
            .map(|k| {
                let s = sorted(&(0..ds.len()).map(|i| ds.x(i)[k]).collect::<Vec<_>>());
                (quantile_sorted(&s, 0.05), quantile_sorted(&s, 0.95))
            })
            .unzip();
        CovariateWeight::Box { low, high }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            CovariateWeight::One => 1.0,
            CovariateWeight::Box { low, high } => {
                let inside = x.iter().zip(low.iter().zip(high)).all(|(v, (lo, hi))| *lo <= *v && *v <= *hi);
                if inside { 1.0 } else { 0.0 }
            }
            CovariateWeight::Scaled(c, inner) => c * inner.eval(x),
        }
    }
}

/// A cross-validation score with its bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvScore {
    pub score: f64,
    /// Leave-one-out terms dropped because their modal set was empty.
    pub skipped: usize,
    /// Leave-one-out terms attempted (observed rows with `w(Xᵢ) > 0`).
    pub terms: usize,
}

enum Term {
    Value(f64),
    Skipped,
}

pub fn cv_score(
    ds: &Dataset,
    model: &dyn Propensity,
    bw: Bandwidths,
    w_fn: &CovariateWeight,
    cfg: &MeanShiftConfig,
) -> Result<CvScore, BandwidthError> {
    if ds.n_observed() < 2 {
        return Err(BandwidthError::TooFewObserved(ds.n_observed()));
    }
    let r = cfg.resolve(ds, bw)?;
    let base = WeightVector::observed(ds);
    let rows: Vec<(usize, f64)> = (0..ds.len())
        .filter(|&i| ds.delta(i))
        .map(|i| (i, w_fn.eval(ds.x(i))))
        .filter(|&(_, wx)| wx > 0.0)
        .collect();
    let terms = rows
        .par_iter()
        .map(|&(i, wx)| -> Result<Term, BandwidthError> {
            let x = ds.x(i);
            let y = ds.y(i).expect("observed row");
            let p = model.probability(x)?;
            let slice = CovariateSlice::new(ds, &base.without_row(i)?, bw, x)?;
            let set = match modal_set_on_slice(&slice, x, &r) {
                Err(MeanShiftError::EmptyModalSet) => return Ok(Term::Skipped),
                other => other?,
            };
            let n_modes = set.len() as f64;
            let d = dist_point_set(y, &FiniteSet::new(set.modes).expect("non-empty modal set"));
            Ok(Term::Value(d * d * n_modes * n_modes * wx / p))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut total = 0.0;
    let mut skipped = 0;
    for t in &terms {
        match t {
            Term::Value(v) => total += v,
            Term::Skipped => skipped += 1,
        }
    }
    let attempted = terms.len();
    if skipped as f64 > MAX_SKIPPED_FRACTION * attempted as f64 {
        return Err(BandwidthError::Unreliable { skipped, terms: attempted });
    }
    Ok(CvScore { score: total / ds.len() as f64, skipped, terms: attempted })
}

/// One grid cell; `cv` is `None` when the score was unreliable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub h1: f64,
    pub h2: f64,
    pub cv: Option<f64>,
    pub skipped_terms: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ScoreTable {
    pub rows: Vec<ScoreRow>,
}

impl ScoreTable {
    /// CSV with columns `h1,h2,cv,skipped_terms` at six significant digits;
    /// unreliable cells get `NA`.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["h1", "h2", "cv", "skipped_terms"])?;
        for r in &self.rows {
            w.write_record([
                sig6(r.h1),
                sig6(r.h2),
                r.cv.map_or_else(|| "NA".to_string(), sig6),
                r.skipped_terms.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// The minimizing cell, ties broken toward smaller `h2`, then smaller `h1`.
    pub fn argmin(&self) -> Option<&ScoreRow> {
        self.rows.iter().filter(|r| r.cv.is_some()).min_by(|a, b| {
            a.cv.unwrap()
                .total_cmp(&b.cv.unwrap())
                .then(a.h2.total_cmp(&b.h2))
                .then(a.h1.total_cmp(&b.h1))
        })
    }
}

/// Scores every grid cell and returns the minimizer with the full table.
pub fn select_bandwidths(
    ds: &Dataset,
    model: &dyn Propensity,
    grid: &BandwidthGrid,
    w_fn: &CovariateWeight,
    cfg: &MeanShiftConfig,
) -> Result<(Bandwidths, ScoreTable), BandwidthError> {
    let rows = grid
        .cells()
        .into_par_iter()
        .map(|bw| {
            let (cv, skipped_terms) = match cv_score(ds, model, bw, w_fn, cfg) {
                Ok(s) => (Some(s.score), s.skipped),
                Err(BandwidthError::Unreliable { skipped, .. }) => (None, skipped),
                Err(e) => return Err(e),
            };
            Ok(ScoreRow { h1: bw.h1(), h2: bw.h2(), cv, skipped_terms })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let table = ScoreTable { rows };
    let best = table.argmin().ok_or(BandwidthError::AllUnreliable)?;
    let bw = Bandwidths::new(best.h1, best.h2)?;
    Ok((bw, table))
}
