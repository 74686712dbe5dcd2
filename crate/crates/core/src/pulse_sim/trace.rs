//! Simulated (or measured) P₀ traces and their CSV + JSON sidecar format.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const CSV_HEADER: [&str; 4] = ["abscissa", "mean_p0", "stderr", "n_shots"];

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("trace is inconsistent: {0}")]
    Inconsistent(String),
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("metadata: {0}")]
    Metadata(#[from] serde_json::Error),
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceMetadata {
    /// Protocol that produced the trace, e.g. `dressed_mp` or `spectrum`.
    pub kind: String,
    /// `us` for delay scans, `khz` for detuning scans.
    pub abscissa_unit: String,
    pub seed: Option<u64>,
    /// Free-form parameter record (system parameters, protocol settings).
    #[serde(default)]
    pub params: serde_json::Value,
    pub config_digest: Option<String>,
    #[serde(default)]
    pub extra: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub abscissa: Vec<f64>,
    pub mean_p0: Vec<f64>,
    pub stderr: Vec<f64>,
    pub n_shots: Vec<u64>,
    pub metadata: TraceMetadata,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.abscissa.len()
    }

    pub fn is_empty(&self) -> bool {
        self.abscissa.is_empty()
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        let n = self.abscissa.len();
        if self.mean_p0.len() != n || self.stderr.len() != n || self.n_shots.len() != n {
            return Err(TraceError::Inconsistent("column lengths differ".into()));
        }
        if let Some(i) = self.stderr.iter().position(|s| !(*s >= 0.0)) {
            return Err(TraceError::Inconsistent(format!("row {i}: negative or NaN stderr")));
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), TraceError> {
        self.validate()?;
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| TraceError::Inconsistent(e.to_string());
        w.write_record(CSV_HEADER).map_err(io)?;
        for i in 0..self.len() {
            w.write_record(&[
                format_float(self.abscissa[i]),
                format_float(self.mean_p0[i]),
                format_float(self.stderr[i]),
                self.n_shots[i].to_string(),
            ])
            .map_err(io)?;
        }
        w.flush().map_err(|e| TraceError::Inconsistent(e.to_string()))
    }

    pub fn to_csv_string(&self) -> Result<String, TraceError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
    }

    /// Parses the CSV body. Metadata is left empty.
    pub fn read_csv<R: Read>(reader: R) -> Result<Trace, TraceError> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
        let header = r.headers().map_err(|e| parse_error(1, e.to_string()))?.clone();
        let got: Vec<&str> = header.iter().collect();
        if got != CSV_HEADER {
            return Err(parse_error(1, format!("expected header {}, found {}", CSV_HEADER.join(","), got.join(","))));
        }
        let mut trace = Trace::default();
        for record in r.records() {
            let record = record.map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                parse_error(line, e.to_string())
            })?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            if record.len() != 4 {
                return Err(parse_error(line, format!("expected 4 fields, found {}", record.len())));
            }
            let float = |i: usize| -> Result<f64, TraceError> {
                record[i]
                    .parse::<f64>()
                    .map_err(|e| parse_error(line, format!("column {}: {e} ({:?})", CSV_HEADER[i], &record[i])))
            };
            trace.abscissa.push(float(0)?);
            trace.mean_p0.push(float(1)?);
            let se = float(2)?;
            if se < 0.0 {
                return Err(parse_error(line, "stderr must be non-negative".into()));
            }
            trace.stderr.push(se);
            trace.n_shots.push(
                record[3].parse::<u64>().map_err(|e| parse_error(line, format!("column n_shots: {e} ({:?})", &record[3])))?,
            );
        }
        Ok(trace)
    }

    /// Writes `path` and the sidecar `path` with a `.json` extension.
    pub fn save(&self, path: &Path) -> Result<(), TraceError> {
        let file = std::fs::File::create(path).map_err(|source| TraceError::Io { path: path.to_path_buf(), source })?;
        self.write_csv(std::io::BufWriter::new(file))?;
        let side = sidecar_path(path);
        let json = serde_json::to_string_pretty(&self.metadata)?;
        std::fs::write(&side, json + "\n").map_err(|source| TraceError::Io { path: side.clone(), source })?;
        Ok(())
    }

    /// Reads a CSV trace and, if present, its sidecar.
    pub fn load(path: &Path) -> Result<Trace, TraceError> {
        let file = std::fs::File::open(path).map_err(|source| TraceError::Io { path: path.to_path_buf(), source })?;
        let mut trace = Trace::read_csv(std::io::BufReader::new(file))?;
        let side = sidecar_path(path);
        if side.exists() {
            let text = std::fs::read_to_string(&side).map_err(|source| TraceError::Io { path: side.clone(), source })?;
            trace.metadata = serde_json::from_str(&text)?;
        }
        Ok(trace)
    }
}

pub fn sidecar_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

fn parse_error(line: u64, message: String) -> TraceError {
    TraceError::Parse { line, message }
}

/// Shortest representation that round-trips exactly.
fn format_float(x: f64) -> String {
    format!("{x:?}")
}
