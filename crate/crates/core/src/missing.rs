//! Response-observation probabilities `p(x) = P(δ = 1 | X = x)` and the
//! weight vectors of the complete-data, simplified and IPW estimators.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::Dataset;
use crate::kernel_density::{KdeError, WeightVector};
use crate::stats::silverman_bandwidth;

pub const DEFAULT_CLAMP_FLOOR: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PropensityError {
    #[error("propensity fit failed: {0}")]
    Fit(String),
    #[error("estimator misuse: {0}")]
    Misuse(String),
    #[error("covariate has length {got}, model was fitted with {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("clamp floor must lie in (0, 0.5), got {0}")]
    ClampFloor(f64),
    #[error(transparent)]
    Kde(#[from] KdeError),
}

/// Anything that can report an observation probability at a covariate point.
pub trait Propensity: Sync {
    fn probability(&self, x: &[f64]) -> Result<f64, PropensityError>;
}

/// The four benchmark missingness mechanisms on a scalar covariate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MissingModel {
    M1,
    M2,
    M3,
    M4,
}

impl MissingModel {
    pub const ALL: [MissingModel; 4] = [MissingModel::M1, MissingModel::M2, MissingModel::M3, MissingModel::M4];

    /// Probability that the response at `x` is observed.
    pub fn probability(self, x: f64) -> f64 {
        use std::f64::consts::PI;
        match self {
            MissingModel::M1 => 0.6 + 0.3 * (PI * x).cos(),
            MissingModel::M2 => 0.6 + 0.3 * (2.0 * PI * x).cos(),
            MissingModel::M3 => 0.7 + 0.3 * (2.0 * PI * x * x).cos(),
            MissingModel::M4 => 0.75,
        }
    }
}

impl fmt::Display for MissingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            MissingModel::M1 => "M1",
            MissingModel::M2 => "M2",
            MissingModel::M3 => "M3",
            MissingModel::M4 => "M4",
        };
        f.write_str(s)
    }
}

impl FromStr for MissingModel {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "m1" => Ok(MissingModel::M1),
            "m2" => Ok(MissingModel::M2),
            "m3" => Ok(MissingModel::M3),
            "m4" => Ok(MissingModel::M4),
            other => Err(format!("unknown missingness model {other:?}")),
        }
    }
}

/// Logistic regression of δ on `(1, x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    /// Intercept first, then one slope per covariate.
    pub coefficients: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub iterations: usize,
}

/// Nadaraya–Watson regression of δ on `x` with a Gaussian kernel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelFit {
    pub bandwidth: f64,
    d: usize,
    xs: Vec<f64>,
    deltas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PropensityKind {
    Known(MissingModel),
    Logistic(LogisticFit),
    Kernel(KernelFit),
}

/// A propensity model whose evaluations are clamped to `[clamp_floor, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropensityModel {
    pub kind: PropensityKind,
    clamp_floor: f64,
}

impl PropensityModel {
    pub fn known(model: MissingModel) -> Self {
        PropensityModel { kind: PropensityKind::Known(model), clamp_floor: DEFAULT_CLAMP_FLOOR }
    }

    pub fn with_clamp_floor(mut self, floor: f64) -> Result<Self, PropensityError> {
        if !(floor > 0.0 && floor < 0.5) {
            return Err(PropensityError::ClampFloor(floor));
        }
        self.clamp_floor = floor;
        Ok(self)
    }

    pub fn clamp_floor(&self) -> f64 {
        self.clamp_floor
    }

    pub fn label(&self) -> String {
        match &self.kind {
            PropensityKind::Known(m) => format!("known-{}", m.to_string().to_ascii_lowercase()),
            PropensityKind::Logistic(_) => "logistic".into(),
            PropensityKind::Kernel(_) => "kernel".into(),
        }
    }

    fn raw(&self, x: &[f64]) -> Result<f64, PropensityError> {
        match &self.kind {
            PropensityKind::Known(m) => Ok(m.probability(x[0])),
            PropensityKind::Logistic(fit) => {
                let expected = fit.coefficients.len() - 1;
                if x.len() != expected {
                    return Err(PropensityError::Dimension { expected, got: x.len() });
                }
                let eta = fit.coefficients[0]
                    + fit.coefficients[1..].iter().zip(x).map(|(b, v)| b * v).sum::<f64>();
                Ok(sigmoid(eta))
            }
            PropensityKind::Kernel(fit) => {
                if x.len() != fit.d {
                    return Err(PropensityError::Dimension { expected: fit.d, got: x.len() });
                }
                let inv = 0.5 / (fit.bandwidth * fit.bandwidth);
                let logs: Vec<f64> = fit
                    .xs
                    .chunks(fit.d)
                    .map(|xi| -xi.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() * inv)
                    .collect();
                let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let (num, den) = logs.iter().zip(&fit.deltas).fold((0.0, 0.0), |(n, d), (l, del)| {
                    let k = (l - top).exp();
                    (n + k * del, d + k)
                });
                Ok(num / den)
            }
        }
    }
}

impl Propensity for PropensityModel {
    fn probability(&self, x: &[f64]) -> Result<f64, PropensityError> {
        propensity_eval(self, x)
    }
}

/// `p(x)` clamped to `[clamp_floor, 1]`.
pub fn propensity_eval(model: &PropensityModel, x: &[f64]) -> Result<f64, PropensityError> {
    if x.is_empty() {
        return Err(PropensityError::Dimension { expected: 1, got: 0 });
    }
    Ok(model.raw(x)?.clamp(model.clamp_floor, 1.0))
}

fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

fn require_both_classes(ds: &Dataset) -> Result<(), PropensityError> {
    let observed = ds.n_observed();
    if observed == 0 || observed == ds.len() {
        return Err(PropensityError::Fit(
            "need both observed and missing responses to model the observation probability".into(),
        ));
    }
    Ok(())
}

fn log_likelihood(design: &DMatrix<f64>, delta: &DVector<f64>, beta: &DVector<f64>) -> f64 {
    let eta = design * beta;
    eta.iter()
        .zip(delta.iter())
        .map(|(&e, &d)| {
            // log(1 + exp(e)) computed without overflow.
            let softplus = if e > 0.0 { e + (-e).exp().ln_1p() } else { e.exp().ln_1p() };
            d * e - softplus
        })
        .sum()
}

/// Maximum-likelihood logistic regression of δ on an intercept and the
/// covariates, by Newton–Raphson with step halving.
pub fn fit_propensity_logistic(ds: &Dataset) -> Result<PropensityModel, PropensityError> {
    require_both_classes(ds)?;
    let n = ds.len();
    let p = ds.dim() + 1;
    let design = DMatrix::from_fn(n, p, |i, j| if j == 0 { 1.0 } else { ds.x(i)[j - 1] });
    let delta = DVector::from_fn(n, |i, _| if ds.delta(i) { 1.0 } else { 0.0 });
    let mut beta = DVector::zeros(p);
    let mut ll = log_likelihood(&design, &delta, &beta);
    let separation = || PropensityError::Fit("observed and missing rows are (quasi-)perfectly separated by the covariates".into());

    for iter in 1..=100 {
        let eta = &design * &beta;
        let probs = eta.map(sigmoid);
        let grad = design.transpose() * (&delta - &probs);
        let wts = probs.map(|q| q * (1.0 - q));
        let hessian = design.transpose() * DMatrix::from_diagonal(&wts) * &design;
        let step = hessian.clone().cholesky().ok_or_else(separation)?.solve(&grad);

        let mut scale = 1.0;
        let (next, next_ll) = loop {
            let cand = &beta + &step * scale;
            let cand_ll = log_likelihood(&design, &delta, &cand);
            if cand_ll >= ll - 1e-12 || scale < 1e-8 {
                break (cand, cand_ll);
            }
            scale *= 0.5;
        };
        let moved = (&next - &beta).amax();
        beta = next;
        ll = next_ll;
        // A vanishing likelihood means the fitted probabilities hit the labels.
        if ll > -1e-6 || beta.amax() > 1e6 {
            return Err(separation());
        }
        if moved < 1e-10 {
            let eta = &design * &beta;
            let wts = eta.map(|e| {
                let q = sigmoid(e);
                q * (1.0 - q)
            });
            let hessian = design.transpose() * DMatrix::from_diagonal(&wts) * &design;
            let cov = hessian.try_inverse().ok_or_else(separation)?;
            let std_errors = (0..p).map(|j| cov[(j, j)].max(0.0).sqrt()).collect();
            return Ok(PropensityModel {
                kind: PropensityKind::Logistic(LogisticFit {
                    coefficients: beta.iter().copied().collect(),
                    std_errors,
                    iterations: iter,
                }),
                clamp_floor: DEFAULT_CLAMP_FLOOR,
            });
        }
    }
    Err(separation())
}

/// Silverman's rule on each covariate coordinate, averaged over coordinates.
pub fn silverman_propensity_bandwidth(ds: &Dataset) -> f64 {
    let d = ds.dim();
    let per_coord: Vec<f64> = (0..d)
        .map(|k| {
            let col: Vec<f64> = (0..ds.len()).map(|i| ds.x(i)[k]).collect();
            silverman_bandwidth(&col)
        })
        .collect();
    per_coord.iter().sum::<f64>() / d as f64
}

pub fn fit_propensity_kernel(ds: &Dataset, h_p: f64) -> Result<PropensityModel, PropensityError> {
    require_both_classes(ds)?;
    if !(h_p > 0.0 && h_p.is_finite()) {
        return Err(PropensityError::Fit(format!("kernel bandwidth must be positive, got {h_p}")));
    }
    let d = ds.dim();
    let xs = (0..ds.len()).flat_map(|i| ds.x(i).to_vec()).collect();
    let deltas = (0..ds.len()).map(|i| if ds.delta(i) { 1.0 } else { 0.0 }).collect();
    Ok(PropensityModel {
        kind: PropensityKind::Kernel(KernelFit { bandwidth: h_p, d, xs, deltas }),
        clamp_floor: DEFAULT_CLAMP_FLOOR,
    })
}

/// The five estimators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EstimatorKind {
    #[serde(rename = "C")]
    Complete,
    #[serde(rename = "S")]
    Simplified,
    #[serde(rename = "W")]
    Ipw,
    #[serde(rename = "SI")]
    SingleImputation,
    #[serde(rename = "MI")]
    MultipleImputation,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 5] = [
        EstimatorKind::Complete,
        EstimatorKind::Simplified,
        EstimatorKind::Ipw,
        EstimatorKind::SingleImputation,
        EstimatorKind::MultipleImputation,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            EstimatorKind::Complete => "C",
            EstimatorKind::Simplified => "S",
            EstimatorKind::Ipw => "W",
            EstimatorKind::SingleImputation => "SI",
            EstimatorKind::MultipleImputation => "MI",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for EstimatorKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "c" => Ok(EstimatorKind::Complete),
            "s" => Ok(EstimatorKind::Simplified),
            "w" => Ok(EstimatorKind::Ipw),
            "si" => Ok(EstimatorKind::SingleImputation),
            "mi" => Ok(EstimatorKind::MultipleImputation),
            other => Err(format!("unknown estimator {other:?}")),
        }
    }
}

/// Weights realizing the C (all ones), S (`δ_i`) and W (`δ_i / p(X_i)`)
/// estimators.
pub fn weights_for(
    kind: EstimatorKind,
    ds: &Dataset,
    model: Option<&dyn Propensity>,
) -> Result<WeightVector, PropensityError> {
    match kind {
        EstimatorKind::Complete => {
            if !ds.is_complete() {
                return Err(PropensityError::Misuse(format!(
                    "the complete-data estimator needs every response; {} are missing",
                    ds.n_missing()
                )));
            }
            Ok(WeightVector::ones(ds)?)
        }
        EstimatorKind::Simplified => Ok(WeightVector::observed(ds)),
        EstimatorKind::Ipw => {
            let model = model.ok_or_else(|| PropensityError::Misuse("the IPW estimator needs a propensity model".into()))?;
            let w = (0..ds.len())
                .map(|i| if ds.delta(i) { model.probability(ds.x(i)).map(|p| 1.0 / p) } else { Ok(0.0) })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(WeightVector::new(ds, w)?)
        }
        EstimatorKind::SingleImputation | EstimatorKind::MultipleImputation => Err(PropensityError::Misuse(format!(
            "{kind} is an imputation estimator and has no weight vector"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Sample;

    #[test]
    fn known_models() {
        let m4 = PropensityModel::known(MissingModel::M4);
        for x in [0.0, 0.3, 1.0] {
            assert_eq!(propensity_eval(&m4, &[x]).unwrap(), 0.75);
        }
        let m1 = PropensityModel::known(MissingModel::M1);
        assert!((propensity_eval(&m1, &[0.0]).unwrap() - 0.9).abs() < 1e-15);
        assert!((propensity_eval(&m1, &[0.5]).unwrap() - 0.6).abs() < 1e-15);
        assert!((MissingModel::M1.probability(1.0) - 0.3).abs() < 1e-15);
        assert!((MissingModel::M3.probability(0.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn clamp_floor_bounds() {
        assert!(PropensityModel::known(MissingModel::M1).with_clamp_floor(0.0).is_err());
        assert!(PropensityModel::known(MissingModel::M1).with_clamp_floor(0.5).is_err());
        let m = PropensityModel::known(MissingModel::M1).with_clamp_floor(0.4).unwrap();
        assert_eq!(propensity_eval(&m, &[1.0]).unwrap(), 0.4);
    }

    fn mixed() -> Dataset {
        Dataset::new(vec![
            Sample::observed(vec![0.0], 1.0),
            Sample::missing(vec![0.5]),
            Sample::observed(vec![1.0], 2.0),
            Sample::observed(vec![0.25], 0.0),
        ])
        .unwrap()
    }

    #[test]
    fn weights_by_kind() {
        let ds = mixed();
        let s = weights_for(EstimatorKind::Simplified, &ds, None).unwrap();
        assert_eq!(s.as_slice(), &[1.0, 0.0, 1.0, 1.0]);
        assert!(matches!(weights_for(EstimatorKind::Complete, &ds, None), Err(PropensityError::Misuse(_))));
        assert!(matches!(weights_for(EstimatorKind::Ipw, &ds, None), Err(PropensityError::Misuse(_))));
        assert!(matches!(
            weights_for(EstimatorKind::MultipleImputation, &ds, None),
            Err(PropensityError::Misuse(_))
        ));
        let m1 = PropensityModel::known(MissingModel::M1);
        let w = weights_for(EstimatorKind::Ipw, &ds, Some(&m1)).unwrap();
        for i in 0..ds.len() {
            let x = ds.x(i)[0];
            let expect = if ds.delta(i) { 1.0 / (0.6 + 0.3 * (std::f64::consts::PI * x).cos()) } else { 0.0 };
            assert!((w.as_slice()[i] - expect).abs() < 1e-15);
        }
        let complete = Dataset::from_xy(&[0.0, 1.0], &[1.0, 2.0]).unwrap();
        let c = weights_for(EstimatorKind::Complete, &complete, None).unwrap();
        assert_eq!(c, weights_for(EstimatorKind::Simplified, &complete, None).unwrap());
    }

    #[test]
    fn fits_need_both_classes() {
        let complete = Dataset::from_xy(&[0.0, 1.0], &[1.0, 2.0]).unwrap();
        assert!(matches!(fit_propensity_logistic(&complete), Err(PropensityError::Fit(_))));
        assert!(matches!(fit_propensity_kernel(&complete, 0.1), Err(PropensityError::Fit(_))));
    }

    #[test]
    fn separated_labels_fail() {
        let ds = Dataset::new(
            (0..20)
                .map(|i| {
                    let x = i as f64 / 20.0;
                    if x < 0.5 { Sample::observed(vec![x], 0.0) } else { Sample::missing(vec![x]) }
                })
                .collect(),
        )
        .unwrap();
        assert!(matches!(fit_propensity_logistic(&ds), Err(PropensityError::Fit(_))));
    }

    #[test]
    fn kernel_fit_local_average() {
        let ds = Dataset::new(
            (0..40)
                .map(|i| {
                    let x = i as f64 / 40.0;
                    if x < 0.5 || i % 2 == 0 { Sample::observed(vec![x], 0.0) } else { Sample::missing(vec![x]) }
                })
                .collect(),
        )
        .unwrap();
        let m = fit_propensity_kernel(&ds, 0.03).unwrap();
        assert!(propensity_eval(&m, &[0.1]).unwrap() > 0.999);
        assert!((propensity_eval(&m, &[0.8]).unwrap() - 0.5).abs() < 0.1);
        assert!(matches!(propensity_eval(&m, &[0.1, 0.2]), Err(PropensityError::Dimension { .. })));
    }

    #[test]
    fn parse_tags() {
        for k in EstimatorKind::ALL {
            assert_eq!(k.tag().parse::<EstimatorKind>().unwrap(), k);
        }
        assert_eq!("m3".parse::<MissingModel>().unwrap(), MissingModel::M3);
        assert!("m5".parse::<MissingModel>().is_err());
    }
}
