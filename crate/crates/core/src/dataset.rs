//! Regression samples with possibly missing responses.
//!
//! On disk a dataset is a UTF-8 CSV with a header row. An empty response
//! cell or the literal `NA` marks a missing response (`δ = 0`). Covariates
//! must always be present and finite.

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("row {row}: cannot parse {column} value {value:?}")]
    Parse { row: usize, column: String, value: String },
    #[error("row {row}: non-finite value in {column}")]
    NonFinite { row: usize, column: String },
    #[error("row {row}: covariate has length {got}, expected {expected}")]
    Dimension { row: usize, expected: usize, got: usize },
    #[error("dataset has no observed responses")]
    NoObserved,
    #[error("dataset is empty")]
    Empty,
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One row: a covariate vector and an optional response.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: Option<f64>,
}

impl Sample {
    pub fn observed(x: Vec<f64>, y: f64) -> Self {
        Sample { x, y: Some(y) }
    }

    pub fn missing(x: Vec<f64>) -> Self {
        Sample { x, y: None }
    }

    /// Observation indicator δ.
    pub fn delta(&self) -> bool {
        self.y.is_some()
    }
}

/// An immutable, validated sample of `n` rows with `d`-dimensional covariates.
///
/// Covariates are stored row-major in one buffer. Datasets produced by
/// [`crate::simulate::apply_missingness`] additionally remember the masked
/// responses so the complete-data estimator can be run on the same draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    d: usize,
    x: Vec<f64>,
    y: Vec<Option<f64>>,
    pre_deletion: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>) -> Result<Self, DatasetError> {
        let first = samples.first().ok_or(DatasetError::Empty)?;
        let d = first.x.len();
        if d == 0 {
            return Err(DatasetError::Schema("covariate dimension must be positive".into()));
        }
        let mut x = Vec::with_capacity(samples.len() * d);
        let mut y = Vec::with_capacity(samples.len());
        for (row, s) in samples.into_iter().enumerate() {
            if s.x.len() != d {
                return Err(DatasetError::Dimension { row, expected: d, got: s.x.len() });
            }
            if s.x.iter().any(|v| !v.is_finite()) {
                return Err(DatasetError::NonFinite { row, column: "covariate".into() });
            }
            if matches!(s.y, Some(v) if !v.is_finite()) {
                return Err(DatasetError::NonFinite { row, column: "response".into() });
            }
            x.extend_from_slice(&s.x);
            y.push(s.y);
        }
        if y.iter().all(Option::is_none) {
            return Err(DatasetError::NoObserved);
        }
        Ok(Dataset { d, x, y, pre_deletion: None })
    }

    /// Complete one-dimensional dataset from paired slices.
    pub fn from_xy(x: &[f64], y: &[f64]) -> Result<Self, DatasetError> {
        if x.len() != y.len() {
            return Err(DatasetError::Schema(format!(
                "{} covariates but {} responses",
                x.len(),
                y.len()
            )));
        }
        Self::new(x.iter().zip(y).map(|(&x, &y)| Sample::observed(vec![x], y)).collect())
    }

    pub(crate) fn with_pre_deletion(mut self, responses: Vec<f64>) -> Self {
        debug_assert_eq!(responses.len(), self.len());
        self.pre_deletion = Some(responses);
        self
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// Covariate dimension.
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }

    pub fn y(&self, i: usize) -> Option<f64> {
        self.y[i]
    }

    pub fn delta(&self, i: usize) -> bool {
        self.y[i].is_some()
    }

    pub fn responses(&self) -> &[Option<f64>] {
        &self.y
    }

    pub fn sample(&self, i: usize) -> Sample {
        Sample { x: self.x(i).to_vec(), y: self.y(i) }
    }

    pub fn samples(&self) -> impl Iterator<Item = Sample> + '_ {
        (0..self.len()).map(|i| self.sample(i))
    }

    pub fn n_observed(&self) -> usize {
        self.y.iter().filter(|v| v.is_some()).count()
    }

    pub fn n_missing(&self) -> usize {
        self.len() - self.n_observed()
    }

    pub fn is_complete(&self) -> bool {
        self.y.iter().all(Option::is_some)
    }

    pub fn observed_responses(&self) -> Vec<f64> {
        self.y.iter().flatten().copied().collect()
    }

    /// `(min, max)` over the observed responses.
    pub fn observed_range(&self) -> (f64, f64) {
        self.y.iter().flatten().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
    }

    /// `(min, max)` of covariate coordinate `k`.
    pub fn covariate_range(&self, k: usize) -> (f64, f64) {
        (0..self.len()).map(|i| self.x(i)[k]).fold(
            (f64::INFINITY, f64::NEG_INFINITY),
            |(lo, hi), v| (lo.min(v), hi.max(v)),
        )
    }

    /// The sample before responses were masked, when this dataset was
    /// produced by a missingness simulation. Complete datasets return
    /// themselves.
    pub fn pre_deletion(&self) -> Option<Dataset> {
        if self.is_complete() {
            return Some(self.clone());
        }
        let full = self.pre_deletion.as_ref()?;
        Some(Dataset {
            d: self.d,
            x: self.x.clone(),
            y: full.iter().map(|&v| Some(v)).collect(),
            pre_deletion: None,
        })
    }

    /// The same covariates with every response replaced (all observed).
    pub fn with_responses(&self, y: &[f64]) -> Result<Dataset, DatasetError> {
        if y.len() != self.len() {
            return Err(DatasetError::Schema("response vector length mismatch".into()));
        }
        if let Some(row) = y.iter().position(|v| !v.is_finite()) {
            return Err(DatasetError::NonFinite { row, column: "response".into() });
        }
        Ok(Dataset {
            d: self.d,
            x: self.x.clone(),
            y: y.iter().map(|&v| Some(v)).collect(),
            pre_deletion: None,
        })
    }

    /// Rows reordered by `order` (a permutation of `0..n`).
    pub fn permuted(&self, order: &[usize]) -> Dataset {
        let mut samples: Vec<Sample> = order.iter().map(|&i| self.sample(i)).collect();
        let pre = self
            .pre_deletion
            .as_ref()
            .map(|full| order.iter().map(|&i| full[i]).collect::<Vec<_>>());
        let mut ds = Dataset::new(std::mem::take(&mut samples)).expect("permutation of a valid dataset");
        ds.pre_deletion = pre;
        ds
    }
}

/// Which CSV columns hold the covariates and the response.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSpec {
    pub covariates: Vec<String>,
    pub response: String,
}

impl ColumnSpec {
    pub fn new<S: Into<String>>(covariates: impl IntoIterator<Item = S>, response: S) -> Self {
        ColumnSpec {
            covariates: covariates.into_iter().map(Into::into).collect(),
            response: response.into(),
        }
    }
}

fn is_missing_cell(cell: &str) -> bool {
    let c = cell.trim();
    c.is_empty() || c == "NA"
}

pub fn load_dataset(path: impl AsRef<Path>, columns: &ColumnSpec) -> Result<Dataset, DatasetError> {
    let file = std::fs::File::open(path)?;
    read_dataset(file, columns)
}

pub fn read_dataset<R: Read>(reader: R, columns: &ColumnSpec) -> Result<Dataset, DatasetError> {
    if columns.covariates.is_empty() {
        return Err(DatasetError::Schema("no covariate columns given".into()));
    }
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let find = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| DatasetError::Schema(format!("missing column {name:?}")))
    };
    let cov_idx = columns.covariates.iter().map(|c| find(c)).collect::<Result<Vec<_>, _>>()?;
    let resp_idx = find(&columns.response)?;

    let mut samples = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let mut x = Vec::with_capacity(cov_idx.len());
        for (&j, name) in cov_idx.iter().zip(&columns.covariates) {
            let cell = record.get(j).unwrap_or("");
            let v: f64 = cell.trim().parse().map_err(|_| DatasetError::Parse {
                row,
                column: name.clone(),
                value: cell.to_string(),
            })?;
            x.push(v);
        }
        let cell = record.get(resp_idx).unwrap_or("");
        let y = if is_missing_cell(cell) {
            None
        } else {
            Some(cell.trim().parse::<f64>().map_err(|_| DatasetError::Parse {
                row,
                column: columns.response.clone(),
                value: cell.to_string(),
            })?)
        };
        samples.push(Sample { x, y });
    }
    Dataset::new(samples)
}

/// Writes `ds` with the given column names; missing responses become `NA`.
/// Values use the shortest representation that parses back exactly.
pub fn write_dataset<W: Write>(writer: W, ds: &Dataset, columns: &ColumnSpec) -> Result<(), DatasetError> {
    if columns.covariates.len() != ds.dim() {
        return Err(DatasetError::Schema(format!(
            "{} covariate names for dimension {}",
            columns.covariates.len(),
            ds.dim()
        )));
    }
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = columns.covariates.iter().map(String::as_str).collect();
    header.push(&columns.response);
    wtr.write_record(&header)?;
    for i in 0..ds.len() {
        let mut rec: Vec<String> = ds.x(i).iter().map(|v| v.to_string()).collect();
        rec.push(ds.y(i).map_or_else(|| "NA".to_string(), |v| v.to_string()));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Fraction of rows with an observed response.
pub fn observed_fraction(ds: &Dataset) -> f64 {
    ds.n_observed() as f64 / ds.len() as f64
}
