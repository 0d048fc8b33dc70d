//! CSV and JSON emission of sampled curves.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use fptorder_core::{Curve, EmpiricalCurve};

use crate::CliError;

/// Output encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// One row of a curve file. `stderr` is present only for Monte Carlo output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub t: f64,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub model: String,
    pub label: String,
    pub parameters: serde_json::Value,
    pub version: String,
}

/// A labelled curve ready to be written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveFile {
    pub metadata: Metadata,
    pub rows: Vec<Row>,
}

impl CurveFile {
    pub fn analytic(model: &str, label: &str, parameters: serde_json::Value, curve: &Curve) -> Self {
        let rows = curve
            .times
            .iter()
            .zip(&curve.values)
            .map(|(t, &value)| Row { t, value, stderr: None })
            .collect();
        Self::with_rows(model, label, parameters, rows)
    }

    pub fn empirical(model: &str, label: &str, parameters: serde_json::Value, curve: &EmpiricalCurve) -> Self {
        let rows = curve
            .times
            .iter()
            .enumerate()
            .map(|(i, t)| Row {
                t,
                value: curve.estimate[i],
                stderr: Some(curve.std_err[i]),
            })
            .collect();
        Self::with_rows(model, label, parameters, rows)
    }

    fn with_rows(model: &str, label: &str, parameters: serde_json::Value, rows: Vec<Row>) -> Self {
        Self {
            metadata: Metadata {
                model: model.to_string(),
                label: label.to_string(),
                parameters,
                version: env!("CARGO_PKG_VERSION").to_string(),
            },
            rows,
        }
    }

    pub fn file_name(&self, format: Format) -> String {
        format!("{}_{}.{}", self.metadata.model, self.metadata.label, format.extension())
    }

    /// Writes into `dir` and returns the path.
    pub fn write(&self, dir: &Path, format: Format) -> Result<PathBuf, CliError> {
        let path = dir.join(self.file_name(format));
        let file = File::create(&path).map_err(|e| CliError::Io(path.clone(), e))?;
        let mut out = BufWriter::new(file);
        match format {
            Format::Csv => write_csv(&self.rows, &mut out)?,
            Format::Json => {
                serde_json::to_writer_pretty(&mut out, self).map_err(|e| CliError::Encode(e.to_string()))?;
                writeln!(out).map_err(|e| CliError::Io(path.clone(), e))?;
            }
        }
        out.flush().map_err(|e| CliError::Io(path.clone(), e))?;
        Ok(path)
    }
}

fn write_csv<W: Write>(rows: &[Row], out: W) -> Result<(), CliError> {
    let with_stderr = rows.iter().any(|r| r.stderr.is_some());
    let mut w = csv::Writer::from_writer(out);
    let encode = |e: csv::Error| CliError::Encode(e.to_string());
    if with_stderr {
        w.write_record(["t", "value", "stderr"]).map_err(encode)?;
    } else {
        w.write_record(["t", "value"]).map_err(encode)?;
    }
    // `Display` for f64 is the shortest representation that parses back exactly
    for r in rows {
        let mut record = vec![r.t.to_string(), r.value.to_string()];
        if with_stderr {
            record.push(r.stderr.unwrap_or(f64::NAN).to_string());
        }
        w.write_record(&record).map_err(encode)?;
    }
    w.flush().map_err(|e| CliError::Encode(e.to_string()))
}

/// Reads rows back from a CSV curve file.
pub fn read_csv(path: &Path) -> Result<Vec<Row>, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Encode(e.to_string()))?;
    r.deserialize()
        .collect::<Result<Vec<Row>, _>>()
        .map_err(|e| CliError::Encode(e.to_string()))
}

/// Reads a JSON curve file.
pub fn read_json(path: &Path) -> Result<CurveFile, CliError> {
    let file = File::open(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
    serde_json::from_reader(file).map_err(|e| CliError::Encode(e.to_string()))
}
