//! Data ingestion, deterministic splitting, and preprocessing.
//!
//! A [`Dataset`] is the universal input: an n×d feature matrix plus a
//! response vector. Splitting is by seeded permutation into contiguous
//! blocks, so the parts partition the rows and are reproducible from
//! (n, num_parts, seed) alone.

use std::collections::HashSet;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{FgsError, Result};
use crate::rng::{stream_rng, Stream};

/// Feature matrix, response vector, and feature names.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: DMatrix<f64>,
    response: DVector<f64>,
    feature_names: Vec<String>,
}

impl Dataset {
    /// Validates and wraps the parts of a dataset.
    ///
    /// Requires n ≥ 1, d ≥ 1, all entries finite, and exactly d unique
    /// feature names.
    pub fn new(
        features: DMatrix<f64>,
        response: DVector<f64>,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        let (n, d) = features.shape();
        if n == 0 || d == 0 {
            return Err(FgsError::InvalidData(format!(
                "dataset requires n >= 1 and d >= 1, got n={n}, d={d}"
            )));
        }
        if response.len() != n {
            return Err(FgsError::DimensionMismatch {
                expected: n,
                actual: response.len(),
            });
        }
        if feature_names.len() != d {
            return Err(FgsError::DimensionMismatch {
                expected: d,
                actual: feature_names.len(),
            });
        }
        let unique: HashSet<&str> = feature_names.iter().map(String::as_str).collect();
        if unique.len() != d {
            return Err(FgsError::InvalidData("feature names must be unique".into()));
        }
        if features.iter().any(|v| !v.is_finite()) || response.iter().any(|v| !v.is_finite()) {
            return Err(FgsError::InvalidData(
                "dataset contains non-finite entries".into(),
            ));
        }
        Ok(Dataset {
            features,
            response,
            feature_names,
        })
    }

    /// Builds a dataset with synthetic names x1..xd.
    pub fn with_default_names(features: DMatrix<f64>, response: DVector<f64>) -> Result<Self> {
        let d = features.ncols();
        let names = (1..=d).map(|j| format!("x{j}")).collect();
        Dataset::new(features, response, names)
    }

    pub fn num_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn response(&self) -> &DVector<f64> {
        &self.response
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Row i as an owned column vector (a point in feature space).
    pub fn point(&self, i: usize) -> DVector<f64> {
        self.features.row(i).transpose()
    }

    /// New dataset holding the given rows, in the given order.
    pub fn subset(&self, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(FgsError::InvalidData("empty row subset".into()));
        }
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.num_rows()) {
            return Err(FgsError::InvalidData(format!(
                "row index {bad} out of range for n={}",
                self.num_rows()
            )));
        }
        let d = self.dim();
        let mut features = DMatrix::zeros(rows.len(), d);
        let mut response = DVector::zeros(rows.len());
        for (k, &r) in rows.iter().enumerate() {
            features.set_row(k, &self.features.row(r));
            response[k] = self.response[r];
        }
        Dataset::new(features, response, self.feature_names.clone())
    }

    /// Replaces the response, keeping features and names. Used by the
    /// variance model to regress squared residuals on the same design.
    pub fn with_response(&self, response: DVector<f64>) -> Result<Self> {
        Dataset::new(self.features.clone(), response, self.feature_names.clone())
    }
}

/// Serialization form of [`Dataset`]: row-major features plus response.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetRepr {
    pub feature_names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub response: Vec<f64>,
}

impl From<&Dataset> for DatasetRepr {
    fn from(data: &Dataset) -> Self {
        let rows = (0..data.num_rows())
            .map(|i| data.features().row(i).iter().cloned().collect())
            .collect();
        DatasetRepr {
            feature_names: data.feature_names().to_vec(),
            rows,
            response: data.response().iter().cloned().collect(),
        }
    }
}

impl TryFrom<DatasetRepr> for Dataset {
    type Error = FgsError;

    fn try_from(repr: DatasetRepr) -> Result<Dataset> {
        let n = repr.rows.len();
        let d = repr.feature_names.len();
        if repr.rows.iter().any(|r| r.len() != d) {
            return Err(FgsError::InvalidData(
                "serialized dataset has ragged rows".into(),
            ));
        }
        if n == 0 {
            return Err(FgsError::InvalidData("serialized dataset is empty".into()));
        }
        let features = DMatrix::from_fn(n, d, |i, j| repr.rows[i][j]);
        Dataset::new(
            features,
            DVector::from_vec(repr.response),
            repr.feature_names,
        )
    }
}

/// Deterministic assignment of rows to parts.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitPlan {
    part_assignments: Vec<usize>,
    num_parts: usize,
    seed: u64,
}

impl SplitPlan {
    /// Assigns n rows to `num_parts` parts: a seeded shuffle followed by
    /// contiguous blocks, remainder rows going to the earliest parts.
    pub fn new(n: usize, num_parts: usize, seed: u64) -> Result<Self> {
        if !(num_parts == 2 || num_parts == 4) {
            return Err(FgsError::InvalidConfig(format!(
                "num_parts must be 2 or 4, got {num_parts}"
            )));
        }
        if n < num_parts {
            return Err(FgsError::InvalidData(format!(
                "cannot split {n} rows into {num_parts} parts"
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = stream_rng(seed, Stream::Split, 0);
        order.shuffle(&mut rng);

        let base = n / num_parts;
        let remainder = n % num_parts;
        let mut part_assignments = vec![0usize; n];
        let mut cursor = 0;
        for part in 0..num_parts {
            let size = base + usize::from(part < remainder);
            for &row in &order[cursor..cursor + size] {
                part_assignments[row] = part;
            }
            cursor += size;
        }
        Ok(SplitPlan {
            part_assignments,
            num_parts,
            seed,
        })
    }

    pub fn num_parts(&self) -> usize {
        self.num_parts
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn assignments(&self) -> &[usize] {
        &self.part_assignments
    }

    /// Row indices of each part, ascending within a part.
    pub fn part_rows(&self) -> Vec<Vec<usize>> {
        let mut parts = vec![Vec::new(); self.num_parts];
        for (row, &part) in self.part_assignments.iter().enumerate() {
            parts[part].push(row);
        }
        parts
    }
}

/// Splits `data` into `num_parts` disjoint datasets of near-equal size.
pub fn split(data: &Dataset, num_parts: usize, seed: u64) -> Result<Vec<Dataset>> {
    let plan = SplitPlan::new(data.num_rows(), num_parts, seed)?;
    plan.part_rows()
        .iter()
        .map(|rows| data.subset(rows))
        .collect()
}

/// Per-column transform parameters recorded by [`standardize`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingParams {
    pub shift: Vec<f64>,
    pub scale: Vec<f64>,
    /// Per-feature log flags, matching feature order.
    pub log_applied: Vec<bool>,
    /// Whether the response was log-transformed.
    pub log_response: bool,
}

impl ScalingParams {
    /// Inverts the transform on a standardized dataset, recovering the
    /// original values.
    pub fn invert(&self, data: &Dataset) -> Result<Dataset> {
        let d = data.dim();
        if self.shift.len() != d {
            return Err(FgsError::DimensionMismatch {
                expected: self.shift.len(),
                actual: d,
            });
        }
        let mut features = data.features().clone();
        for j in 0..d {
            for i in 0..data.num_rows() {
                let mut v = features[(i, j)] * self.scale[j] + self.shift[j];
                if self.log_applied[j] {
                    v = v.exp();
                }
                features[(i, j)] = v;
            }
        }
        let mut response = data.response().clone();
        if self.log_response {
            response.apply(|v| *v = v.exp());
        }
        Dataset::new(features, response, data.feature_names().to_vec())
    }
}

/// Standardizes features to mean 0 and variance 1 (population form),
/// optionally log-transforming columns named in `log_columns` first.
/// Naming the response column applies the log to the response only.
pub fn standardize(
    data: &Dataset,
    log_columns: &[String],
    response_name: &str,
) -> Result<(Dataset, ScalingParams)> {
    let d = data.dim();
    let n = data.num_rows();
    for name in log_columns {
        if name != response_name && !data.feature_names().contains(name) {
            return Err(FgsError::InvalidConfig(format!(
                "log column '{name}' not found"
            )));
        }
    }
    let log_applied: Vec<bool> = data
        .feature_names()
        .iter()
        .map(|name| log_columns.contains(name))
        .collect();
    let log_response = log_columns.iter().any(|name| name == response_name);

    let mut features = data.features().clone();
    for j in 0..d {
        if log_applied[j] {
            for i in 0..n {
                let v = features[(i, j)];
                if v <= 0.0 {
                    return Err(FgsError::InvalidData(format!(
                        "non-positive value {v} in log column '{}' (row {})",
                        data.feature_names()[j],
                        i + 1
                    )));
                }
                features[(i, j)] = v.ln();
            }
        }
    }
    let mut response = data.response().clone();
    if log_response {
        for i in 0..n {
            let v = response[i];
            if v <= 0.0 {
                return Err(FgsError::InvalidData(format!(
                    "non-positive value {v} in log column '{response_name}' (row {})",
                    i + 1
                )));
            }
            response[i] = v.ln();
        }
    }

    let mut shift = vec![0.0; d];
    let mut scale = vec![1.0; d];
    for j in 0..d {
        let col = features.column(j);
        let mean = col.sum() / n as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        if var <= 0.0 {
            return Err(FgsError::InvalidData(format!(
                "zero-variance column '{}'",
                data.feature_names()[j]
            )));
        }
        let sd = var.sqrt();
        shift[j] = mean;
        scale[j] = sd;
        for i in 0..n {
            features[(i, j)] = (features[(i, j)] - mean) / sd;
        }
    }

    let standardized = Dataset::new(features, response, data.feature_names().to_vec())?;
    Ok((
        standardized,
        ScalingParams {
            shift,
            scale,
            log_applied,
            log_response,
        },
    ))
}

/// Loads a dataset from a headered CSV file. `features = None` selects
/// every non-target column.
pub fn load_csv(path: &Path, target: &str, features: Option<&[String]>) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();

    let target_idx = headers.iter().position(|h| h == target).ok_or_else(|| {
        FgsError::InvalidData(format!("target column '{target}' not found in header"))
    })?;

    let feature_cols: Vec<(usize, String)> = match features {
        Some(selected) => selected
            .iter()
            .map(|name| {
                headers
                    .iter()
                    .position(|h| h == name)
                    .map(|idx| (idx, name.clone()))
                    .ok_or_else(|| {
                        FgsError::InvalidData(format!("feature column '{name}' not found"))
                    })
            })
            .collect::<Result<_>>()?,
        None => headers
            .iter()
            .enumerate()
            .filter(|(idx, _)| *idx != target_idx)
            .map(|(idx, name)| (idx, name.clone()))
            .collect(),
    };
    if feature_cols.is_empty() {
        return Err(FgsError::InvalidData("no feature columns selected".into()));
    }

    let parse_cell = |raw: &str, row: usize, column: &str| -> Result<f64> {
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            return Err(FgsError::CsvCell {
                row,
                column: column.to_owned(),
                message: "empty cell".into(),
            });
        }
        trimmed.parse::<f64>().map_err(|e| FgsError::CsvCell {
            row,
            column: column.to_owned(),
            message: e.to_string(),
        })
    };

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut response: Vec<f64> = Vec::new();
    for (row_num, record) in reader.records().enumerate() {
        let record = record?;
        let row = row_num + 1;
        let mut values = Vec::with_capacity(feature_cols.len());
        for (idx, name) in &feature_cols {
            let raw = record.get(*idx).ok_or_else(|| FgsError::CsvCell {
                row,
                column: name.clone(),
                message: "missing cell".into(),
            })?;
            values.push(parse_cell(raw, row, name)?);
        }
        let raw = record.get(target_idx).ok_or_else(|| FgsError::CsvCell {
            row,
            column: target.to_owned(),
            message: "missing cell".into(),
        })?;
        response.push(parse_cell(raw, row, target)?);
        rows.push(values);
    }
    if rows.is_empty() {
        return Err(FgsError::InvalidData("csv contains no data rows".into()));
    }

    let n = rows.len();
    let d = feature_cols.len();
    let features_mat = DMatrix::from_fn(n, d, |i, j| rows[i][j]);
    let names = feature_cols.into_iter().map(|(_, name)| name).collect();
    Dataset::new(features_mat, DVector::from_vec(response), names)
}

/// Saves a dataset to CSV with the response in a column named
/// `target`. Floats use the shortest round-trip decimal form, so
/// load_csv recovers the exact bits.
pub fn save_csv(data: &Dataset, path: &Path, target: &str) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = data.feature_names().to_vec();
    header.push(target.to_owned());
    writer.write_record(&header)?;
    for i in 0..data.num_rows() {
        let mut record: Vec<String> = (0..data.dim())
            .map(|j| format!("{}", data.features()[(i, j)]))
            .collect();
        record.push(format!("{}", data.response()[i]));
        writer.write_record(&record)?;
    }
    writer.flush()?;
    Ok(())
}
