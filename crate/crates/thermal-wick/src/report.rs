//! Machine-readable run reports.
//!
//! A [`Report`] pairs every residual with the tolerance it was judged
//! against, carries reconstruction metadata and the config hash, and
//! serializes to deterministic JSON: identical configuration and seed yield
//! byte-identical files. Output files are written atomically (temp file
//! plus rename).

use crate::error::Result;
use crate::oracle::PeriodicityReport;
use crate::reconstruct::ReconstructionReport;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::Path;

/// One residual check. `value` is `None` when the computation itself
/// failed; the failure message then lives in `error`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResidualRecord {
    pub task: String,
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ResidualRecord {
    pub fn measured(task: &str, name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            task: task.into(),
            name: name.into(),
            value: Some(value),
            tolerance,
            pass: value <= tolerance,
            error: None,
        }
    }

    pub fn failed(task: &str, name: &str, tolerance: f64, message: String) -> Self {
        Self {
            task: task.into(),
            name: name.into(),
            value: None,
            tolerance,
            pass: false,
            error: Some(message),
        }
    }
}

/// Full run report; `overall_pass` is the conjunction of all records.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub version: String,
    pub config_hash: String,
    pub records: Vec<ResidualRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reconstruction: Option<ReconstructionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub periodicity: Option<PeriodicityReport>,
    pub overall_pass: bool,
}

impl Report {
    pub fn new(config_hash: String) -> Self {
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash,
            records: Vec::new(),
            reconstruction: None,
            periodicity: None,
            overall_pass: true,
        }
    }

    pub fn push(&mut self, record: ResidualRecord) {
        self.overall_pass &= record.pass;
        self.records.push(record);
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// SHA-256 of the raw configuration bytes, hex-encoded.
pub fn config_hash(raw: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(raw);
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Write `contents` to `path` atomically: a temporary sibling file is
/// renamed into place so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}
