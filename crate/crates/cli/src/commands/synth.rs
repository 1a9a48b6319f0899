//! `tcens synth`: synthetic truth and ensemble from a scenario file.

use std::path::{Path, PathBuf};

use anyhow::Result;
use log::info;
use serde::Serialize;
use tcens::synth::{write_scenario, ScenarioConfig, EXAMPLE_SCENARIO};

use crate::args::SynthArgs;
use crate::config::{pick, require, FileConfig};
use crate::report::{provenance, write_json};
use crate::Outcome;

#[derive(Debug, Serialize)]
struct SynthReport<'a> {
    params: &'a ScenarioConfig,
    files: Vec<String>,
}

fn relative(out: &Path, p: &Path) -> String {
    p.strip_prefix(out).unwrap_or(p).to_string_lossy().replace('\\', "/")
}

pub fn run(args: SynthArgs, file: &FileConfig, out: &Path) -> Result<Outcome> {
    if args.example {
        print!("{EXAMPLE_SCENARIO}");
        return Ok(Outcome::Success);
    }
    let path = require(pick(args.scenario, file.scenario.clone()), "--scenario")?;
    let mut cfg = ScenarioConfig::load(&path)?;
    if let Some(seed) = pick(args.seed, file.seed) {
        cfg.seed = seed;
    }
    if let Some(m) = pick(args.members, file.members) {
        cfg.members = m;
    }
    cfg.validate()?;

    info!("generating {} members over {} steps for {}", cfg.members, cfg.steps, cfg.storm_id);
    let outputs = write_scenario(&cfg, out)?;
    let mut files: Vec<PathBuf> = vec![outputs.truth_track, outputs.ensemble_tracks, outputs.truth_manifest];
    files.extend(outputs.forecast_manifest);
    let files = files.iter().map(|p| relative(out, p)).collect();
    let prov = provenance(&cfg, &[path.as_path()])?;
    write_json(&out.join("synth_report.json"), &prov, &SynthReport { params: &cfg, files })?;
    info!("wrote scenario to {}", out.display());
    Ok(Outcome::Success)
}
