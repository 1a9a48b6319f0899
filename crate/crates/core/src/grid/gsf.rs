//! Grid stack files and run manifests.
//!
//! A GSF file is one UTF-8 JSON header line followed by `nlat*nlon` raw
//! little-endian `f32` values, row-major (latitude rows, longitude columns).
//! Missing points are written as NaN.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::field::{Field, FieldSet, GridSpec, Level, Variable};
use crate::error::{Error, Result};

const BYTE_ORDER: &str = "little-endian";
const DTYPE: &str = "float32";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GsfHeader {
    pub spec: GridSpec,
    pub variable: Variable,
    pub level: Level,
    pub valid_time: DateTime<Utc>,
    pub byte_order: String,
    pub dtype: String,
}

impl GsfHeader {
    pub fn for_field(f: &Field) -> Self {
        Self {
            spec: f.spec,
            variable: f.variable,
            level: f.level,
            valid_time: f.valid_time,
            byte_order: BYTE_ORDER.into(),
            dtype: DTYPE.into(),
        }
    }
}

pub fn write_gsf_to<W: Write>(mut w: W, f: &Field) -> Result<()> {
    serde_json::to_writer(&mut w, &GsfHeader::for_field(f))?;
    w.write_all(b"\n")?;
    let mut buf = Vec::with_capacity(f.values.len() * 4);
    for &v in &f.values {
        buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_gsf_from<R: BufRead>(mut r: R) -> Result<Field> {
    let mut line = String::new();
    r.read_line(&mut line)?;
    let header: GsfHeader =
        serde_json::from_str(line.trim_end()).map_err(|e| Error::Format(format!("bad GSF header: {e}")))?;
    if header.byte_order != BYTE_ORDER || header.dtype != DTYPE {
        return Err(Error::Format(format!("unsupported encoding {} {}", header.byte_order, header.dtype)));
    }
    header.spec.validate()?;
    let n = header.spec.len();
    let mut raw = vec![0u8; n * 4];
    r.read_exact(&mut raw).map_err(|e| Error::Format(format!("truncated GSF payload: {e}")))?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Format("trailing bytes after GSF payload".into()));
    }
    let values = raw.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64).collect();
    Field::with_missing(header.spec, values, header.variable, header.level, header.valid_time)
}

pub fn write_gsf(path: &Path, f: &Field) -> Result<()> {
    let mut bytes = Vec::new();
    write_gsf_to(&mut bytes, f)?;
    atomic_write(path, &bytes)
}

pub fn read_gsf(path: &Path) -> Result<Field> {
    read_gsf_from(BufReader::new(File::open(path)?))
}

/// Writes `bytes` to a sibling temp file, then renames it over `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let name = path.file_name().ok_or_else(|| Error::Format(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", name.to_string_lossy()));
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        w.write_all(bytes)?;
        w.flush()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the manifest's directory unless absolute.
    pub path: String,
    pub variable: Variable,
    pub level: Level,
    pub valid_time: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemberFiles {
    pub member: u32,
    pub files: Vec<ManifestEntry>,
}

/// Files making up one forecast run (all members of one initialization).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub storm_id: Option<String>,
    pub init_time: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub land_mask: Option<String>,
    pub members: Vec<MemberFiles>,
}

/// One problem found while checking a manifest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ManifestProblem {
    MissingField { member: u32, variable: Variable, level: Level, valid_time: DateTime<Utc> },
    MissingFile { member: u32, path: PathBuf },
    NoMembers,
}

impl std::fmt::Display for ManifestProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ManifestProblem::MissingField { member, variable, level, valid_time } => {
                write!(f, "MissingField: member {member} {variable} {level} at {}", valid_time.to_rfc3339())
            }
            ManifestProblem::MissingFile { member, path } => {
                write!(f, "MissingFile: member {member} {}", path.display())
            }
            ManifestProblem::NoMembers => f.write_str("manifest lists no members"),
        }
    }
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        atomic_write(path, text.as_bytes())
    }

    pub fn resolve(base: &Path, rel: &str) -> PathBuf {
        let p = Path::new(rel);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    }

    /// Sorted distinct valid times of one member.
    pub fn times(&self, member: &MemberFiles) -> Vec<DateTime<Utc>> {
        let mut t: Vec<_> = member.files.iter().map(|e| e.valid_time).collect();
        t.sort_unstable();
        t.dedup();
        t
    }

    /// Lists every missing (variable, level, time) and unreadable path,
    /// checking all members against `required`.
    pub fn check(&self, base: &Path, required: &[(Variable, Level)]) -> Vec<ManifestProblem> {
        let mut problems = Vec::new();
        if self.members.is_empty() {
            problems.push(ManifestProblem::NoMembers);
        }
        for m in &self.members {
            for e in &m.files {
                let p = Self::resolve(base, &e.path);
                if !p.is_file() {
                    problems.push(ManifestProblem::MissingFile { member: m.member, path: p });
                }
            }
            for t in self.times(m) {
                for &(variable, level) in required {
                    let found = m.files.iter().any(|e| e.valid_time == t && e.variable == variable && e.level == level);
                    if !found {
                        problems.push(ManifestProblem::MissingField {
                            member: m.member,
                            variable,
                            level,
                            valid_time: t,
                        });
                    }
                }
            }
        }
        problems
    }

    /// Loads one member's fields grouped into time-ordered sets. Only
    /// entries matching `wanted` are read; `None` reads everything.
    pub fn load_member(
        &self,
        base: &Path,
        member: &MemberFiles,
        wanted: Option<&[(Variable, Level)]>,
    ) -> Result<Vec<FieldSet>> {
        let mut by_time: BTreeMap<DateTime<Utc>, FieldSet> = BTreeMap::new();
        for e in &member.files {
            if let Some(w) = wanted {
                if !w.contains(&(e.variable, e.level)) {
                    continue;
                }
            }
            let f = read_gsf(&Self::resolve(base, &e.path))?;
            if f.variable != e.variable || f.level != e.level || f.valid_time != e.valid_time {
                return Err(Error::Format(format!("{}: header disagrees with manifest entry", e.path)));
            }
            by_time.entry(e.valid_time).or_insert_with(|| FieldSet::new(e.valid_time)).insert(f)?;
        }
        Ok(by_time.into_values().collect())
    }

    pub fn load_land_mask(&self, base: &Path) -> Result<Option<Field>> {
        self.land_mask.as_ref().map(|p| read_gsf(&Self::resolve(base, p))).transpose()
    }
}
