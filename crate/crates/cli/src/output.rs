//! Artifact writing. Every file carries the config digest and seed in a JSON
//! sidecar; nothing time-dependent is recorded.

use std::path::{Path, PathBuf};

use cdd_core::model_fitting::{FitOutcome, FitStatus};
use cdd_core::pulse_sim::Trace;
use serde::Serialize;

use crate::error::CliError;

pub struct Output {
    pub dir: PathBuf,
    pub digest: String,
    pub seed: u64,
    pub command: &'static str,
}

#[derive(Serialize)]
struct TableSidecar<'a> {
    command: &'a str,
    seed: u64,
    config_digest: &'a str,
    columns: &'a [&'a str],
}

/// Shortest float text that parses back to the same value.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

fn io(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

impl Output {
    pub fn new(dir: PathBuf, digest: String, seed: u64, command: &'static str) -> Result<Self, CliError> {
        std::fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
        Ok(Self { dir, digest, seed, command })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn trace(&self, name: &str, trace: &mut Trace) -> Result<PathBuf, CliError> {
        trace.metadata.config_digest = Some(self.digest.clone());
        let path = self.path(name);
        trace.save(&path)?;
        Ok(path)
    }

    pub fn table(&self, name: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let mut w = csv::Writer::from_path(&path).map_err(|e| io(&path, e))?;
        w.write_record(columns).map_err(|e| io(&path, e))?;
        for row in rows {
            w.write_record(row).map_err(|e| io(&path, e))?;
        }
        w.flush().map_err(|e| io(&path, e))?;
        let side = TableSidecar { command: self.command, seed: self.seed, config_digest: &self.digest, columns };
        self.json(&Path::new(name).with_extension("json").to_string_lossy(), &side)?;
        Ok(path)
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        let text = serde_json::to_string_pretty(value).map_err(|e| io(&path, e))?;
        std::fs::write(&path, text + "\n").map_err(|e| io(&path, e))?;
        Ok(path)
    }

    pub fn text(&self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        std::fs::write(&path, text).map_err(|e| io(&path, e))?;
        Ok(path)
    }
}

/// Machine-readable fit result in display units (kHz, µs, rad).
#[derive(Debug, Serialize)]
pub struct FitSummary {
    pub model: String,
    pub status: FitStatus,
    pub iterations: usize,
    pub rss: f64,
    pub dof: usize,
    pub unidentifiable: Vec<String>,
    pub params: Vec<FitParam>,
}

#[derive(Debug, Serialize)]
pub struct FitParam {
    pub name: String,
    pub unit: String,
    pub value: f64,
    /// Non-finite bounds (degenerate fits) are written as null.
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub fixed: bool,
}

impl FitSummary {
    pub fn from_outcome(o: &FitOutcome) -> Self {
        let finite = |v: f64| v.is_finite().then_some(v);
        Self {
            model: o.model_id.clone(),
            status: o.status,
            iterations: o.iterations,
            rss: o.rss,
            dof: o.dof,
            unidentifiable: o.unidentifiable.clone(),
            params: (0..o.names.len())
                .map(|i| {
                    let u = o.units[i];
                    FitParam {
                        name: o.names[i].clone(),
                        unit: u.label().to_string(),
                        value: u.to_display(o.values[i]),
                        ci_low: finite(u.to_display(o.ci[i].0)),
                        ci_high: finite(u.to_display(o.ci[i].1)),
                        fixed: o.frozen[i],
                    }
                })
                .collect(),
        }
    }
}

/// Writes `<stem>_fit.txt` and `<stem>_fit.json`.
pub fn write_fit(out: &Output, stem: &str, outcome: &FitOutcome) -> Result<(), CliError> {
    out.text(&format!("{stem}_fit.txt"), &cdd_core::model_fitting::format_report(outcome))?;
    out.json(&format!("{stem}_fit.json"), &FitSummary::from_outcome(outcome))?;
    Ok(())
}
