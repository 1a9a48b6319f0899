//! Report envelopes, provenance, and atomic output helpers.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use chrono::{SecondsFormat, Utc};
use serde::Serialize;
use sha2::{Digest, Sha256};
use tcens::grid::gsf::atomic_write;

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub name: String,
    pub sha256: String,
}

/// Everything that determines a report's content: tool version, a hash of
/// the effective parameters, and hashes of the input files. Input paths are
/// reduced to file names so relocating a run does not change the report.
#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub inputs: Vec<InputDigest>,
}

/// Run-specific facts excluded from reproducibility comparisons.
#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub generated_at: String,
    pub threads: usize,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    metadata: Metadata,
    provenance: &'a Provenance,
    #[serde(flatten)]
    body: &'a T,
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(sha256_bytes(&bytes))
}

pub fn provenance(params: &impl Serialize, inputs: &[&Path]) -> Result<Provenance> {
    let inputs = inputs
        .iter()
        .map(|p| {
            Ok(InputDigest {
                name: p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
                sha256: sha256_file(p)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(Provenance {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: sha256_bytes(serde_json::to_string(params)?.as_bytes()),
        inputs,
    })
}

pub fn current_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// Writes `{metadata, provenance, ..body}` as pretty JSON.
pub fn write_json(path: &Path, prov: &Provenance, body: &impl Serialize) -> Result<()> {
    let env = Envelope {
        metadata: Metadata {
            generated_at: Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true),
            threads: current_threads(),
        },
        provenance: prov,
        body,
    };
    let mut text = serde_json::to_string_pretty(&env)?;
    text.push('\n');
    atomic_write(path, text.as_bytes()).with_context(|| format!("writing {}", path.display()))
}

pub fn write_csv<S: Serialize>(path: &Path, rows: &[S]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("csv buffer: {e}"))?;
    atomic_write(path, &bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    atomic_write(path, text.as_bytes()).with_context(|| format!("writing {}", path.display()))
}

/// A report with its metadata block removed, for comparisons.
pub fn without_metadata(text: &str) -> Result<serde_json::Value> {
    let mut v: serde_json::Value = serde_json::from_str(text)?;
    if let Some(o) = v.as_object_mut() {
        o.remove("metadata");
    }
    Ok(v)
}
