//! Distances between finite sets of reals and the averaged squared
//! Hausdorff error (ASE) of an estimated modal curve.

use thiserror::Error;

use crate::meanshift::ModalCurve;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("set is empty")]
    EmptySet,
    #[error("non-finite set element")]
    NonFinite,
    #[error("meshes differ at point {0}")]
    MeshMismatch(usize),
    #[error("true modal set is empty at mesh point {0}")]
    EmptyTruth(usize),
    #[error("grid resolution must be positive")]
    InvalidDelta,
}

/// A non-empty, ascending set of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSet(Vec<f64>);

impl FiniteSet {
    pub fn new(mut values: Vec<f64>) -> Result<Self, MetricError> {
        if values.is_empty() {
            return Err(MetricError::EmptySet);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(MetricError::NonFinite);
        }
        values.sort_by(f64::total_cmp);
        Ok(FiniteSet(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// `min_{a ∈ A} |b − a|`, by binary search.
pub fn dist_point_set(b: f64, a: &FiniteSet) -> f64 {
    let v = &a.0;
    let idx = v.partition_point(|&x| x < b);
    let mut best = f64::INFINITY;
    if idx < v.len() {
        best = best.min((v[idx] - b).abs());
    }
    if idx > 0 {
        best = best.min((b - v[idx - 1]).abs());
    }
    best
}

fn directed(a: &FiniteSet, b: &FiniteSet) -> f64 {
    a.0.iter().map(|&x| dist_point_set(x, b)).fold(0.0, f64::max)
}

pub fn hausdorff(a: &FiniteSet, b: &FiniteSet) -> f64 {
    directed(a, b).max(directed(b, a))
}

/// Outcome of scoring one estimated curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AseReport {
    pub value: f64,
    /// Mesh points where the estimate was empty and the penalty was charged.
    pub empty_points: usize,
}

/// `Σ_j Haus(est_j, true_j)² Δ`.
///
/// An empty estimated set contributes `empty_penalty_range² Δ` and is
/// counted in [`AseReport::empty_points`].
pub fn ase(
    estimated: &ModalCurve,
    truth: &ModalCurve,
    delta: f64,
    empty_penalty_range: f64,
) -> Result<AseReport, MetricError> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(MetricError::InvalidDelta);
    }
    if estimated.mesh.len() != truth.mesh.len() {
        return Err(MetricError::MeshMismatch(estimated.mesh.len().min(truth.mesh.len())));
    }
    let mut total = 0.0;
    let mut empty_points = 0;
    for (j, (est, tru)) in estimated.sets.iter().zip(&truth.sets).enumerate() {
        if estimated.mesh[j] != truth.mesh[j] {
            return Err(MetricError::MeshMismatch(j));
        }
        let t = FiniteSet::new(tru.modes.clone()).map_err(|_| MetricError::EmptyTruth(j))?;
        let h = if est.modes.is_empty() {
            empty_points += 1;
            empty_penalty_range
        } else {
            hausdorff(&FiniteSet::new(est.modes.clone())?, &t)
        };
        total += h * h * delta;
    }
    Ok(AseReport { value: total, empty_points })
}
