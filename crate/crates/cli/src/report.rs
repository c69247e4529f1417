//! Run reports: deterministic JSON written once under a name derived from
//! its own SHA-256 digest.

use anyhow::{Context, Result};
use mutkit_core::{LiftMode, SpherePoint};
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const SCHEMA: &str = "mutkit report v1";

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

/// One pass/fail line of a report. For bounded quantities `value <= limit`
/// is required and `margin = limit - value`.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub limit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<Value>,
}

impl Check {
    pub fn flag(name: impl Into<String>, passed: bool) -> Self {
        Self {
            name: name.into(),
            passed,
            value: None,
            limit: None,
            margin: None,
            detail: None,
        }
    }

    /// Passes when `value <= limit` (NaN fails).
    pub fn bounded(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= limit,
            value: Some(value),
            limit: Some(limit),
            margin: Some(limit - value),
            detail: None,
        }
    }

    /// A check that could not be carried out because the computation failed.
    pub fn failed(name: impl Into<String>, error: impl std::fmt::Display) -> Self {
        Self::flag(name, false).with_detail(Value::String(error.to_string()))
    }

    pub fn with_detail(mut self, detail: Value) -> Self {
        self.detail = Some(detail);
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: &'static str,
    pub inputs: Vec<InputDigest>,
    pub inputs_digest: String,
    pub seed: u64,
    pub lift: LiftMode,
    pub tolerances: BTreeMap<&'static str, f64>,
    pub passed: bool,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub result: Value,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Digest over the per-file digests, in reading order.
pub fn combined_digest(inputs: &[InputDigest]) -> String {
    let joined: Vec<&str> = inputs.iter().map(|i| i.sha256.as_str()).collect();
    sha256_hex(joined.join("\n").as_bytes())
}

impl Report {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut s = serde_json::to_string_pretty(self).expect("report is plain data");
        s.push('\n');
        s.into_bytes()
    }

    /// Writes `<dir>/<command>-<digest prefix>.json`. An existing file of that
    /// name already holds these bytes and is left alone.
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let bytes = self.to_bytes();
        let digest = sha256_hex(&bytes);
        std::fs::create_dir_all(dir).with_context(|| format!("creating report directory {}", dir.display()))?;
        let path = dir.join(format!("{}-{}.json", self.command, &digest[..16]));
        if !path.exists() {
            std::fs::write(&path, &bytes).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(path)
    }
}

/// Volumes are reported as fixed 12-digit decimals.
pub fn volume_string(x: f64) -> String {
    let s = format!("{x:.12}");
    if s == "-0.000000000000" {
        s[1..].to_string()
    } else {
        s
    }
}

pub fn complex_json(z: num_complex::Complex<f64>) -> Value {
    serde_json::json!([z.re, z.im])
}

pub fn point_json(p: &SpherePoint<f64>) -> Value {
    match p.to_complex() {
        Some(z) => complex_json(z),
        None => Value::String("infinity".into()),
    }
}

pub fn matrix_json(m: &mutkit_core::Moebius) -> Value {
    Value::Array(m.entries().iter().map(|z| complex_json(*z)).collect())
}
