//! Subcommand implementations.

use std::path::{Path, PathBuf};

use anyhow::Result;
use log::error;
use tcens::grid::gsf::RunManifest;
use tcens::grid::{Level, Variable};

use crate::error::CliError;

pub mod energy;
pub mod skill;
pub mod synth;
pub mod track;
pub mod verify;

/// Loads a manifest and checks that every member has `required` at every
/// listed time. Returns the manifest and the directory its paths resolve
/// against.
pub fn open_manifest(path: &Path, required: &[(Variable, Level)]) -> Result<(RunManifest, PathBuf)> {
    let manifest = RunManifest::load(path)?;
    let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
    let problems = manifest.check(&base, required);
    if !problems.is_empty() {
        for p in &problems {
            error!("{}: {p}", path.display());
        }
        return Err(CliError::InvalidManifest {
            path: path.display().to_string(),
            problems: problems.iter().map(|p| p.to_string()).collect(),
        }
        .into());
    }
    Ok((manifest, base))
}
