//! CSV tables and JSON run manifests.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::LabError;

/// Floats with 17 significant digits, which round-trips every f64.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// A fixed-schema table of floats.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn write(&self, path: &Path) -> Result<(), LabError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.columns)?;
        for r in &self.rows {
            w.write_record(r.iter().map(|&x| fmt_f64(x)))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self, LabError> {
        let mut r = csv::Reader::from_path(path)?;
        let columns = r.headers()?.iter().map(String::from).collect();
        let mut rows = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let row = rec
                .iter()
                .map(|f| f.parse::<f64>().map_err(|e| LabError::Format(format!("{path:?}: {e}"))))
                .collect::<Result<_, _>>()?;
            rows.push(row);
        }
        Ok(Self { columns, rows })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub config: serde_json::Value,
    pub master_seed: Option<u64>,
    pub tool_version: String,
    /// Seconds since the Unix epoch.
    pub started: f64,
    pub finished: f64,
    pub outputs: Vec<OutputDigest>,
}

pub fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

pub fn sha256_file(path: &Path) -> Result<String, LabError> {
    let bytes = fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

impl RunManifest {
    pub fn start(command_line: Vec<String>, config: serde_json::Value, master_seed: Option<u64>) -> Self {
        Self {
            command_line,
            config,
            master_seed,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            started: now(),
            finished: 0.0,
            outputs: Vec::new(),
        }
    }

    pub fn record(&mut self, path: &Path) -> Result<(), LabError> {
        let sha256 = sha256_file(path)?;
        self.outputs.push(OutputDigest { path: path.display().to_string(), sha256 });
        Ok(())
    }

    /// Stamps the end time and writes `<stem>.manifest.json` next to the first output, or at `fallback`.
    pub fn finish(mut self, fallback: &Path) -> Result<PathBuf, LabError> {
        self.finished = now();
        let path = match self.outputs.first() {
            Some(o) => manifest_path(Path::new(&o.path)),
            None => fallback.to_path_buf(),
        };
        let mut f = fs::File::create(&path)?;
        f.write_all(serde_json::to_string_pretty(&self)?.as_bytes())?;
        f.write_all(b"\n")?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    /// Recomputes each output digest and lists the files that no longer match.
    pub fn stale_outputs(&self) -> Result<Vec<String>, LabError> {
        let mut bad = Vec::new();
        for o in &self.outputs {
            if sha256_file(Path::new(&o.path))? != o.sha256 {
                bad.push(o.path.clone());
            }
        }
        Ok(bad)
    }
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let stem = output.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
    output.with_file_name(format!("{stem}.manifest.json"))
}
