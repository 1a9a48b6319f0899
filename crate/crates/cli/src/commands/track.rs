//! `tcens track`: one storm through every member of a forecast manifest.

use std::path::Path;

use anyhow::{bail, Context, Result};
use chrono::{DateTime, Utc};
use log::{info, warn};
use serde::Serialize;
use tcens::grid::{Level, Variable};
use tcens::par;
use tcens::tracker::csv::{read_tracks, tracks_to_string};
use tcens::tracker::{track_member, EnsembleTrackSet, MemberId, PhaseSchedule, Track, TrackerConfig, TrackingContext};

use super::open_manifest;
use crate::args::TrackArgs;
use crate::config::{pick, require, tracker_config, FileConfig};
use crate::error::CliError;
use crate::report::{provenance, write_json, write_text};
use crate::Outcome;

/// Fields the tracker reads at every time.
pub fn required_fields(cfg: &TrackerConfig) -> Vec<(Variable, Level)> {
    let mut req = vec![
        (Variable::Msl, Level::Surface),
        (Variable::U, Level::Surface),
        (Variable::V, Level::Surface),
        (Variable::U, Level::Hpa(850)),
        (Variable::V, Level::Hpa(850)),
    ];
    for s in &cfg.steering_levels {
        for v in [Variable::U, Variable::V] {
            if !req.contains(&(v, Level::Hpa(s.level_hpa))) {
                req.push((v, Level::Hpa(s.level_hpa)));
            }
        }
    }
    if cfg.require_thickness_max_when_extratropical {
        req.push((Variable::Z, Level::Hpa(cfg.thickness_levels.0)));
        req.push((Variable::Z, Level::Hpa(cfg.thickness_levels.1)));
    }
    req
}

/// Finds the observed track of `storm` among the tracks of a CSV.
pub fn observed_track(tracks: Vec<Track>, storm: &str) -> Option<Track> {
    let mut matching: Vec<Track> = tracks.into_iter().filter(|t| t.storm_id == storm).collect();
    let obs = matching.iter().position(|t| t.member == MemberId::Obs).unwrap_or(0);
    (!matching.is_empty()).then(|| matching.swap_remove(obs))
}

pub fn load_tracks(path: &Path) -> Result<Vec<Track>> {
    let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_tracks(f).with_context(|| format!("reading tracks from {}", path.display()))
}

#[derive(Debug, Serialize)]
struct TrackParams<'a> {
    storm_id: &'a str,
    init_time: DateTime<Utc>,
    tracker: &'a TrackerConfig,
}

#[derive(Debug, Serialize)]
struct MemberStatus {
    member: u32,
    ok: bool,
    points: usize,
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct TrackReport<'a> {
    params: TrackParams<'a>,
    members: Vec<MemberStatus>,
    files: Vec<String>,
}

pub fn stamp(t: DateTime<Utc>) -> String {
    t.format("%Y%m%d%H").to_string()
}

pub fn run(args: TrackArgs, file: &FileConfig, out: &Path) -> Result<Outcome> {
    let manifest_path = require(pick(args.manifest, file.manifest.clone()), "--manifest")?;
    let obs_path = require(pick(args.obs, file.obs.clone()), "--obs")?;
    let cfg = tracker_config(file.tracker.as_ref(), &args.tracker)?;

    // validate everything before computing
    let (manifest, base) = open_manifest(&manifest_path, &required_fields(&cfg))?;
    let storm = pick(args.storm, file.storm.clone())
        .or(manifest.storm_id.clone())
        .context("no storm id: pass --storm or set storm_id in the manifest")?;
    let obs = observed_track(load_tracks(&obs_path)?, &storm).ok_or_else(|| CliError::UnmatchedStorm(storm.clone()))?;
    let Some(seed) = obs.at(manifest.init_time).copied() else {
        bail!(tcens::Error::TimeMisalignment(format!(
            "observed track of {storm} has no position at the initial time {}",
            manifest.init_time.to_rfc3339()
        )));
    };
    let land = manifest.load_land_mask(&base)?;
    let phases = PhaseSchedule::from_track(&obs);
    let wanted = required_fields(&cfg);

    info!("tracking {storm} from {} over {} members", manifest.init_time.to_rfc3339(), manifest.members.len());
    let ctx = TrackingContext { storm_id: &storm, seed: &seed, cfg: &cfg, land_mask: land.as_ref(), phases: &phases };
    let results: Vec<Result<Track>> = par::map(&manifest.members, |m| {
        let steps = manifest.load_member(&base, m, Some(&wanted))?;
        Ok(track_member(&steps, MemberId::Member(m.member), &ctx)?)
    });

    let mut tracks = Vec::new();
    let mut status = Vec::new();
    for (m, r) in manifest.members.iter().zip(results) {
        match r {
            Ok(t) => {
                status.push(MemberStatus { member: m.member, ok: true, points: t.points.len(), error: None });
                tracks.push(t);
            }
            Err(e) => {
                warn!("member {} failed: {e:#}", m.member);
                status.push(MemberStatus { member: m.member, ok: false, points: 0, error: Some(format!("{e:#}")) });
            }
        }
    }
    if tracks.is_empty() {
        return Err(CliError::AllMembersFailed(status.len()).into());
    }
    let failed = status.iter().filter(|s| !s.ok).count();
    let set = EnsembleTrackSet::from_members(storm.clone(), manifest.init_time, tracks)?;

    let dir = out.join("tracks");
    let prefix = format!("{storm}_{}", stamp(manifest.init_time));
    let mut files = Vec::new();
    for t in &set.members {
        let MemberId::Member(m) = t.member else { continue };
        let name = format!("{prefix}_m{m:03}.csv");
        write_text(&dir.join(&name), &tracks_to_string(&[t])?)?;
        files.push(format!("tracks/{name}"));
    }
    let mean_name = format!("{prefix}_mean.csv");
    write_text(&dir.join(&mean_name), &tracks_to_string(&[&set.mean_track])?)?;
    files.push(format!("tracks/{mean_name}"));
    let mut all: Vec<&Track> = set.members.iter().collect();
    all.push(&set.mean_track);
    write_text(&out.join("tracks.csv"), &tracks_to_string(&all)?)?;
    files.push("tracks.csv".into());

    let params = TrackParams { storm_id: &storm, init_time: manifest.init_time, tracker: &cfg };
    let prov = provenance(&params, &[manifest_path.as_path(), obs_path.as_path()])?;
    let report = TrackReport { params, members: status, files };
    write_json(&out.join("track_report.json"), &prov, &report)?;
    info!("wrote {} member tracks to {}", set.members.len(), out.display());
    Ok(if failed > 0 { Outcome::Partial } else { Outcome::Success })
}
