//! Tables with a fixed column order, written as CSV or JSON, and the
//! metadata sidecar that accompanies every run.

use std::fs;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
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

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Empty,
}

impl Cell {
    /// CSV rendering: floats in shortest round-trip scientific notation,
    /// independent of locale.
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) if v.is_finite() => Value::from(*v),
            Cell::Num(v) => Value::from(format!("{v:e}")),
            Cell::Int(v) => Value::from(*v),
            Cell::Text(s) => Value::from(s.as_str()),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(v: Option<T>) -> Self {
        v.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, header: &'static [&'static str]) -> Self {
        Self {
            name: name.into(),
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(
            row.len(),
            self.header.len(),
            "row width does not match the `{}` header",
            self.name
        );
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| *h == name)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => {
                let mut w = csv::WriterBuilder::new()
                    .terminator(csv::Terminator::Any(b'\n'))
                    .from_writer(Vec::new());
                w.write_record(self.header).expect("writing to memory");
                for row in &self.rows {
                    w.write_record(row.iter().map(Cell::csv)).expect("writing to memory");
                }
                String::from_utf8(w.into_inner().expect("flushing memory")).expect("CSV of UTF-8 fields")
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|row| {
                        let obj: Map<String, Value> = self
                            .header
                            .iter()
                            .zip(row)
                            .map(|(h, c)| (h.to_string(), c.json()))
                            .collect();
                        Value::Object(obj)
                    })
                    .collect();
                let mut s = serde_json::to_string_pretty(&rows).expect("serialising rows");
                s.push('\n');
                s
            }
        }
    }
}

/// Everything needed to regenerate a run's outputs byte for byte.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub format: Format,
    pub seed: Option<u64>,
    pub beam: BeamSummary,
    pub outputs: Vec<String>,
    pub config: Option<String>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BeamSummary {
    pub wavelength_m: f64,
    pub k_per_m: f64,
    pub w0_m: f64,
    pub rayleigh_range_m: f64,
}

impl From<&tiltsense::BeamParams> for BeamSummary {
    fn from(b: &tiltsense::BeamParams) -> Self {
        Self {
            wavelength_m: b.wavelength(),
            k_per_m: b.k(),
            w0_m: b.w0(),
            rayleigh_range_m: b.rayleigh_range(),
        }
    }
}

/// Collects output files for one command and writes them under `dir`.
pub struct OutputSet {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutputSet {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, file: &str, contents: &str) -> Result<PathBuf> {
        let path = self.dir.join(file);
        fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.written.push(file.to_string());
        Ok(path)
    }

    pub fn write_table(&mut self, table: &Table, format: Format) -> Result<PathBuf> {
        self.write(&format!("{}.{}", table.name, format.extension()), &table.render(format))
    }

    /// Writes `<stem>.meta.json` listing every file written so far.
    pub fn finish(mut self, stem: &str, mut meta: Metadata) -> Result<Vec<PathBuf>> {
        meta.outputs = self.written.clone();
        let mut json = serde_json::to_string_pretty(&meta).expect("serialising metadata");
        json.push('\n');
        self.write(&format!("{stem}.meta.json"), &json)?;
        Ok(self.written.iter().map(|f| self.dir.join(f)).collect())
    }
}
