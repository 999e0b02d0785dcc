//! Query point selection for model-based commands.
//!
//! Exactly one source is accepted: an inline point, a CSV of points
//! whose columns are matched to the model's feature names, or random
//! points drawn inside the bounding box of the smoothing data.

use std::path::{Path, PathBuf};

use clap::Args;
use nalgebra::DVector;
use rand::Rng;

use fgs::dataset::Dataset;
use fgs::rng::{stream_rng, Stream};
use fgs::{FgsError, Result};

use crate::config::parse_point;

#[derive(Debug, Clone, Args)]
pub struct QueryFlags {
    /// Inline query point as comma-separated coordinates.
    #[arg(long, value_name = "X1,..,XD")]
    pub point: Option<String>,

    /// CSV file of query points; columns are matched by feature name.
    #[arg(long, value_name = "FILE", conflicts_with = "point")]
    pub points: Option<PathBuf>,

    /// Number of random query points inside the smoothing-data ranges.
    #[arg(long, value_name = "K", conflicts_with_all = ["point", "points"])]
    pub random: Option<usize>,
}

impl QueryFlags {
    /// Resolves the flags against the data the model smooths over.
    pub fn resolve(&self, smoothing: &Dataset, seed: u64) -> Result<Vec<DVector<f64>>> {
        match (&self.point, &self.points, self.random) {
            (Some(text), None, None) => {
                let coords = parse_point(text)?;
                if coords.len() != smoothing.dim() {
                    return Err(FgsError::DimensionMismatch {
                        expected: smoothing.dim(),
                        actual: coords.len(),
                    });
                }
                Ok(vec![DVector::from_vec(coords)])
            }
            (None, Some(path), None) => load_points(path, smoothing.feature_names()),
            (None, None, Some(k)) => {
                if k == 0 {
                    return Err(FgsError::InvalidConfig(
                        "--random must be at least 1".into(),
                    ));
                }
                Ok(random_points(smoothing, k, seed))
            }
            _ => Err(FgsError::InvalidConfig(
                "exactly one of --point, --points, or --random is required".into(),
            )),
        }
    }
}

/// Reads query points from a CSV file, matching columns by name.
pub fn load_points(path: &Path, feature_names: &[String]) -> Result<Vec<DVector<f64>>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.to_string()).collect();
    let mut indices = Vec::with_capacity(feature_names.len());
    for name in feature_names {
        let idx = headers.iter().position(|h| h == name).ok_or_else(|| {
            FgsError::InvalidData(format!(
                "query file {} has no column '{}'",
                path.display(),
                name
            ))
        })?;
        indices.push(idx);
    }
    let mut points = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let mut coords = Vec::with_capacity(indices.len());
        for (&idx, name) in indices.iter().zip(feature_names) {
            let cell = record.get(idx).ok_or_else(|| FgsError::CsvCell {
                row: row + 2,
                column: name.clone(),
                message: "missing field".into(),
            })?;
            let value: f64 = cell.trim().parse().map_err(|_| FgsError::CsvCell {
                row: row + 2,
                column: name.clone(),
                message: format!("cannot parse '{cell}' as a number"),
            })?;
            coords.push(value);
        }
        points.push(DVector::from_vec(coords));
    }
    if points.is_empty() {
        return Err(FgsError::InvalidData(format!(
            "query file {} has no rows",
            path.display()
        )));
    }
    Ok(points)
}

/// Draws `k` points uniformly inside the per-coordinate range of the
/// smoothing data. Constant coordinates stay at their single value.
pub fn random_points(smoothing: &Dataset, k: usize, seed: u64) -> Vec<DVector<f64>> {
    let d = smoothing.dim();
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for i in 0..smoothing.num_rows() {
        let x = smoothing.point(i);
        for j in 0..d {
            lo[j] = lo[j].min(x[j]);
            hi[j] = hi[j].max(x[j]);
        }
    }
    let mut rng = stream_rng(seed, Stream::QueryPoints, 0);
    (0..k)
        .map(|_| {
            DVector::from_iterator(
                d,
                (0..d).map(|j| {
                    if hi[j] > lo[j] {
                        rng.random_range(lo[j]..hi[j])
                    } else {
                        lo[j]
                    }
                }),
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn toy() -> Dataset {
        let x = DMatrix::from_row_slice(4, 2, &[0.0, 1.0, 1.0, 1.0, 0.5, 3.0, 0.25, 2.0]);
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0, 4.0]);
        Dataset::with_default_names(x, y).unwrap()
    }

    #[test]
    fn random_points_stay_in_ranges() {
        let data = toy();
        let pts = random_points(&data, 20, 7);
        assert_eq!(pts.len(), 20);
        for p in &pts {
            assert!(p[0] >= 0.0 && p[0] <= 1.0);
            assert!(p[1] >= 1.0 && p[1] <= 3.0);
        }
        assert_eq!(random_points(&data, 20, 7), pts);
    }

    #[test]
    fn points_file_matches_columns_by_name() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pts.csv");
        std::fs::write(&path, "x2,extra,x1\n5.0,9,0.5\n6.0,9,0.75\n").unwrap();
        let pts = load_points(&path, &["x1".into(), "x2".into()]).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[0], DVector::from_vec(vec![0.5, 5.0]));
        assert_eq!(pts[1], DVector::from_vec(vec![0.75, 6.0]));
    }

    #[test]
    fn missing_column_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pts.csv");
        std::fs::write(&path, "x1\n0.5\n").unwrap();
        let err = load_points(&path, &["x1".into(), "x2".into()]).unwrap_err();
        assert!(err.to_string().contains("x2"));
    }
}
