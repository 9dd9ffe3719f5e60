//! Weighted Gaussian product-kernel estimates of the joint density of
//! `(X, Y)`:
//!
//! ```text
//! f(x, y) = 1 / (h1^d h2 Σ w_i) Σ w_i K(‖x − X_i‖ / h1) K((y − Y_i) / h2)
//! ```
//!
//! Unit weights give the complete-data estimator, `w_i = δ_i` the
//! complete-case (simplified) one and `w_i = δ_i / p(X_i)` the IPW one.
//!
//! Everything that is evaluated repeatedly at a fixed covariate point goes
//! through a [`CovariateSlice`], which caches `ln w_i + ln K1` per row so an
//! evaluation in `y` costs one pass over the rows.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;

/// `1 / sqrt(2π)`.
pub const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Kernel terms whose log-weight falls this far below the largest term are
/// dropped from mean-shift updates (a relative cutoff of `exp(-50)`).
pub const LOG_KERNEL_CUTOFF: f64 = 50.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KdeError {
    #[error("weights sum to zero")]
    DegenerateWeights,
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("no kernel mass at the query covariate")]
    IsolatedPoint,
    #[error("covariate has length {got}, expected {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("bandwidths must be positive and finite (h1 = {h1}, h2 = {h2})")]
    InvalidBandwidth { h1: f64, h2: f64 },
}

/// Standard normal density.
pub fn gaussian_kernel(u: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * u * u).exp()
}

/// Covariate (`h1`) and response (`h2`) bandwidths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBandwidths")]
pub struct Bandwidths {
    h1: f64,
    h2: f64,
}

#[derive(Deserialize)]
struct RawBandwidths {
    h1: f64,
    h2: f64,
}

impl TryFrom<RawBandwidths> for Bandwidths {
    type Error = KdeError;
    fn try_from(raw: RawBandwidths) -> Result<Self, KdeError> {
        Bandwidths::new(raw.h1, raw.h2)
    }
}

impl Bandwidths {
    pub fn new(h1: f64, h2: f64) -> Result<Self, KdeError> {
        if h1 > 0.0 && h2 > 0.0 && h1.is_finite() && h2.is_finite() {
            Ok(Bandwidths { h1, h2 })
        } else {
            Err(KdeError::InvalidBandwidth { h1, h2 })
        }
    }

    pub fn h1(&self) -> f64 {
        self.h1
    }

    pub fn h2(&self) -> f64 {
        self.h2
    }
}

/// Non-negative per-row weights, zero on every row without a response.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    w: Vec<f64>,
}

impl WeightVector {
    pub fn new(ds: &Dataset, w: Vec<f64>) -> Result<Self, KdeError> {
        if w.len() != ds.len() {
            return Err(KdeError::InvalidWeights(format!("{} weights for {} rows", w.len(), ds.len())));
        }
        for (i, &wi) in w.iter().enumerate() {
            if !(wi >= 0.0 && wi.is_finite()) {
                return Err(KdeError::InvalidWeights(format!("row {i}: weight {wi}")));
            }
            if wi > 0.0 && !ds.delta(i) {
                return Err(KdeError::InvalidWeights(format!("row {i}: positive weight on a missing response")));
            }
        }
        if w.iter().sum::<f64>() <= 0.0 {
            return Err(KdeError::DegenerateWeights);
        }
        Ok(WeightVector { w })
    }

    /// `w_i = δ_i`.
    pub fn observed(ds: &Dataset) -> Self {
        let w = (0..ds.len()).map(|i| if ds.delta(i) { 1.0 } else { 0.0 }).collect();
        WeightVector { w }
    }

    /// All ones; only valid for complete data.
    pub fn ones(ds: &Dataset) -> Result<Self, KdeError> {
        if !ds.is_complete() {
            return Err(KdeError::InvalidWeights("unit weights need a complete dataset".into()));
        }
        Ok(WeightVector { w: vec![1.0; ds.len()] })
    }

    /// A copy with row `i` removed from the estimate.
    pub fn without_row(&self, i: usize) -> Result<Self, KdeError> {
        let mut w = self.w.clone();
        w[i] = 0.0;
        if w.iter().sum::<f64>() <= 0.0 {
            return Err(KdeError::DegenerateWeights);
        }
        Ok(WeightVector { w })
    }

    pub fn scaled(&self, c: f64) -> Result<Self, KdeError> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(KdeError::InvalidWeights(format!("scale {c}")));
        }
        Ok(WeightVector { w: self.w.iter().map(|v| v * c).collect() })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.w.iter().sum()
    }
}

/// The weighted sample seen from one covariate point `x`.
///
/// Rows are stored in decreasing order of covariate mass so that sums over
/// terms can stop once the remaining rows are negligible.
#[derive(Debug, Clone)]
pub struct CovariateSlice {
    ys: Vec<f64>,
    y_lo: f64,
    y_hi: f64,
    /// `ln(w_i / w_max) − ‖x − X_i‖² / (2 h1²)` for every row with `w_i > 0`.
    log_mass: Vec<f64>,
    max_log_mass: f64,
    h1_pow_d: f64,
    h2: f64,
    inv_two_h2_sq: f64,
    /// `Σ w_i / w_max`.
    relative_weight_sum: f64,
}

impl CovariateSlice {
    pub fn new(ds: &Dataset, w: &WeightVector, bw: Bandwidths, x: &[f64]) -> Result<Self, KdeError> {
        if x.len() != ds.dim() {
            return Err(KdeError::Dimension { expected: ds.dim(), got: x.len() });
        }
        if w.len() != ds.len() {
            return Err(KdeError::InvalidWeights("weight vector does not match dataset".into()));
        }
        let inv_two_h1_sq = 0.5 / (bw.h1 * bw.h1);
        let w_max = w.as_slice().iter().copied().fold(0.0, f64::max);
        let mut rows: Vec<(f64, f64)> = Vec::with_capacity(ds.len());
        let mut relative_weight_sum = 0.0;
        for (i, &wi) in w.as_slice().iter().enumerate() {
            if wi <= 0.0 {
                continue;
            }
            let y = ds.y(i).ok_or_else(|| KdeError::InvalidWeights(format!("row {i} has no response")))?;
            let dist_sq: f64 = ds.x(i).iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum();
            // Normalizing by the largest weight makes proportional weight vectors
            // produce identical terms.
            let relative = wi / w_max;
            relative_weight_sum += relative;
            rows.push((y, relative.ln() - dist_sq * inv_two_h1_sq));
        }
        if relative_weight_sum <= 0.0 {
            return Err(KdeError::DegenerateWeights);
        }
        // Stable sort: ties keep row order.
        rows.sort_by(|a, b| b.1.total_cmp(&a.1));
        let (ys, log_mass): (Vec<f64>, Vec<f64>) = rows.into_iter().unzip();
        let max_log_mass = log_mass[0];
        let (y_lo, y_hi) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        Ok(CovariateSlice {
            ys,
            y_lo,
            y_hi,
            log_mass,
            max_log_mass,
            h1_pow_d: bw.h1.powi(ds.dim() as i32),
            h2: bw.h2,
            inv_two_h2_sq: 0.5 / (bw.h2 * bw.h2),
            relative_weight_sum,
        })
    }

    /// Responses of the rows carrying weight.
    pub fn responses(&self) -> &[f64] {
        &self.ys
    }

    /// `(min, max)` of the weighted responses.
    pub fn response_range(&self) -> (f64, f64) {
        (self.y_lo, self.y_hi)
    }

    #[inline]
    fn log_term(&self, i: usize, y: f64) -> f64 {
        let r = y - self.ys[i];
        self.log_mass[i] - r * r * self.inv_two_h2_sq
    }

    fn density_norm(&self) -> f64 {
        FRAC_1_SQRT_2PI * FRAC_1_SQRT_2PI / (self.h1_pow_d * self.h2 * self.relative_weight_sum)
    }

    /// Joint density estimate at `(x, y)`.
    pub fn density(&self, y: f64) -> f64 {
        let s: f64 = (0..self.ys.len()).map(|i| self.log_term(i, y).exp()).sum();
        s * self.density_norm()
    }

    /// Kernel marginal density of the covariate at `x`.
    pub fn marginal(&self) -> f64 {
        let s: f64 = self.log_mass.iter().map(|a| a.exp()).sum();
        s * FRAC_1_SQRT_2PI / (self.h1_pow_d * self.relative_weight_sum)
    }

    /// `f(y | x) = f(x, y) / f(x)`, computed with a common shift so it stays
    /// finite far from the data.
    pub fn conditional_density(&self, y: f64) -> Result<f64, KdeError> {
        if self.marginal() <= 0.0 {
            return Err(KdeError::IsolatedPoint);
        }
        let num: f64 = (0..self.ys.len()).map(|i| (self.log_term(i, y) - self.max_log_mass).exp()).sum();
        let den: f64 = self.log_mass.iter().map(|a| (a - self.max_log_mass).exp()).sum();
        Ok(FRAC_1_SQRT_2PI / self.h2 * num / den)
    }

    /// `∂f(x, y) / ∂y`.
    pub fn y_gradient(&self, y: f64) -> f64 {
        let s: f64 = (0..self.ys.len())
            .map(|i| self.log_term(i, y).exp() * (self.ys[i] - y))
            .sum();
        s * self.density_norm() / (self.h2 * self.h2)
    }

    /// One conditional mean-shift update from `y`, or `None` when no row
    /// carries kernel mass.
    pub fn mean_shift_target(&self, y: f64) -> Option<f64> {
        self.mean_shift_target_with_cutoff(y, LOG_KERNEL_CUTOFF)
    }

    /// As [`Self::mean_shift_target`], dropping terms whose log-weight is
    /// more than `cutoff` below the largest one. `f64::INFINITY` keeps every
    /// term.
    pub fn mean_shift_target_with_cutoff(&self, y: f64, cutoff: f64) -> Option<f64> {
        let n = self.ys.len();
        // A term never exceeds its row's covariate mass, and masses are
        // sorted, so both scans stop early.
        let mut top = f64::NEG_INFINITY;
        for i in 0..n {
            if self.log_mass[i] <= top {
                break;
            }
            top = top.max(self.log_term(i, y));
        }
        if !top.is_finite() {
            return None;
        }
        let floor = top - cutoff;
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..n {
            if self.log_mass[i] < floor {
                break;
            }
            let e = self.log_term(i, y);
            if e >= floor {
                let k = (e - top).exp();
                num += k * self.ys[i];
                den += k;
            }
        }
        if den > 0.0 {
            // Rounding can put the ratio one ulp outside the hull.
            Some((num / den).clamp(self.y_lo, self.y_hi))
        } else {
            None
        }
    }
}

pub fn joint_density(ds: &Dataset, w: &WeightVector, bw: Bandwidths, x: &[f64], y: f64) -> Result<f64, KdeError> {
    Ok(CovariateSlice::new(ds, w, bw, x)?.density(y))
}

pub fn conditional_density(ds: &Dataset, w: &WeightVector, bw: Bandwidths, x: &[f64], y: f64) -> Result<f64, KdeError> {
    CovariateSlice::new(ds, w, bw, x)?.conditional_density(y)
}

/// Derivative of [`joint_density`] in `y`; positive where the density
/// increases with `y`.
pub fn density_y_gradient(ds: &Dataset, w: &WeightVector, bw: Bandwidths, x: &[f64], y: f64) -> Result<f64, KdeError> {
    Ok(CovariateSlice::new(ds, w, bw, x)?.y_gradient(y))
}
