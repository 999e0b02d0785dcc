//! Output rendering: JSON, CSV, and fixed-width tables.
//!
//! Numeric cells in tables and CSV use shortest round-trip formatting,
//! so the same value prints identically in every format and can be
//! parsed back exactly.

use serde::Serialize;
use std::path::{Path, PathBuf};

use fgs::smoother::{FgsModel, LocalFit, DEFAULT_H};
use fgs::{FgsError, Result};
use nalgebra::DVector;

/// Machine or human output shape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
    Table,
}

impl std::str::FromStr for OutputFormat {
    type Err = FgsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            "table" => Ok(OutputFormat::Table),
            other => Err(FgsError::InvalidConfig(format!(
                "unknown format '{other}' (expected json, csv, or table)"
            ))),
        }
    }
}

/// Writes `text` to the path when given, otherwise to stdout.
pub fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, text)?;
            Ok(())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

/// Shortest round-trip form of `v`, byte-identical to the JSON
/// rendering of the same value.
pub fn num(v: f64) -> String {
    serde_json::Number::from_f64(v).map_or_else(|| "null".to_string(), |n| n.to_string())
}

/// Renders rows of pre-formatted cells as a fixed-width table.
pub fn render_table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let cols = headers.len();
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        for (j, cell) in row.iter().enumerate() {
            widths[j] = widths[j].max(cell.len());
        }
    }
    let mut out = String::new();
    let mut push_row = |cells: &[String]| {
        for (j, cell) in cells.iter().enumerate() {
            out.push_str(cell);
            if j + 1 < cols {
                out.push_str(&" ".repeat(widths[j] - cell.len() + 2));
            }
        }
        out.push('\n');
    };
    push_row(&headers.iter().map(|h| h.to_string()).collect::<Vec<_>>());
    push_row(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>());
    for row in rows {
        push_row(row);
    }
    out
}

/// Renders rows as CSV with a header row.
pub fn render_csv(headers: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(headers)?;
    for row in rows {
        writer.write_record(row)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| FgsError::InvalidData(format!("csv buffer: {e}")))?;
    String::from_utf8(bytes).map_err(|e| FgsError::InvalidData(format!("csv encoding: {e}")))
}

/// One coefficient line of a local report.
#[derive(Debug, Clone, Serialize)]
pub struct CoefficientRow {
    pub coefficient: String,
    pub beta_hat: f64,
    pub std_error: f64,
}

/// Local slopes with standard errors at one point, in the two-column
/// report layout.
#[derive(Debug, Clone, Serialize)]
pub struct LocalReport {
    pub x: Vec<f64>,
    pub h: f64,
    pub mu_hat: f64,
    pub se_mu: f64,
    pub effective_count: f64,
    pub regularized: bool,
    pub coefficients: Vec<CoefficientRow>,
}

impl LocalReport {
    pub fn from_fit(fit: &LocalFit, names: &[String]) -> Self {
        LocalReport {
            x: fit.x.iter().cloned().collect(),
            h: fit.h,
            mu_hat: fit.beta0,
            se_mu: fit.se_beta0,
            effective_count: fit.effective_count,
            regularized: fit.regularized,
            coefficients: names
                .iter()
                .enumerate()
                .map(|(j, name)| CoefficientRow {
                    coefficient: name.clone(),
                    beta_hat: fit.beta[j],
                    std_error: fit.se_beta[j],
                })
                .collect(),
        }
    }

    /// Two-column table (β̂, standard error) per named coefficient.
    pub fn to_table(&self) -> String {
        let mut rows = vec![vec![
            "mu_hat".to_string(),
            num(self.mu_hat),
            num(self.se_mu),
        ]];
        for row in &self.coefficients {
            rows.push(vec![
                row.coefficient.clone(),
                num(row.beta_hat),
                num(row.std_error),
            ]);
        }
        render_table(&["coefficient", "beta_hat", "std_error"], &rows)
    }
}

/// Local slopes and standard errors at (x, h), labeled with the
/// model's feature names.
pub fn local_report(model: &FgsModel, x: &DVector<f64>, h: Option<f64>) -> Result<LocalReport> {
    let h = h.unwrap_or(DEFAULT_H);
    let fit = model.predict(x, h)?;
    Ok(LocalReport::from_fit(
        &fit,
        model.smoothing_data().feature_names(),
    ))
}

/// Joins an output directory with a file name.
pub fn in_dir(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_alignment_and_header() {
        let rows = vec![
            vec!["x1".into(), "1.5".into()],
            vec!["longname".into(), "-0.25".into()],
        ];
        let table = render_table(&["coefficient", "beta_hat"], &rows);
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("coefficient"));
        assert!(lines[1].starts_with("---"));
        assert!(lines[3].starts_with("longname"));
    }

    #[test]
    fn csv_has_header_row() {
        let rows = vec![vec!["0".into(), "1.25".into()]];
        let text = render_csv(&["id", "value"], &rows).unwrap();
        assert_eq!(text, "id,value\n0,1.25\n");
    }

    #[test]
    fn numbers_round_trip_through_formatting() {
        let v = 0.1 + 0.2;
        assert_eq!(num(v).parse::<f64>().unwrap(), v);
    }
}
