#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use chrono::{DateTime, Duration, TimeZone, Utc};
use serde_json::Value;
use tcens::grid::gsf::{read_gsf, write_gsf, ManifestEntry, MemberFiles, RunManifest};
use tcens::grid::{destination, Field, GeoPoint};
use tcens::synth::EXAMPLE_SCENARIO;
use tcens::tracker::csv::tracks_to_string;
use tcens::tracker::{MemberId, Phase, Track, TrackPoint};
use tcens_cli::report::without_metadata;

pub fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2018, 9, 1, 0, 0, 0).unwrap()
}

/// Runs the binary in `dir` with logging kept quiet.
pub fn tcens(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tcens"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .env_remove("TCENS_THREADS")
        .output()
        .expect("running tcens")
}

pub fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Writes the example scenario with `edit` applied and returns its path.
pub fn scenario(dir: &Path, edit: impl FnOnce(&mut toml::Table)) -> PathBuf {
    let mut t: toml::Table = EXAMPLE_SCENARIO.parse().unwrap();
    edit(&mut t);
    let p = dir.join("scenario.toml");
    std::fs::write(&p, toml::to_string(&t).unwrap()).unwrap();
    p
}

/// A smaller, shorter scenario for command tests.
pub fn small(t: &mut toml::Table) {
    t.insert("members".into(), 4.into());
    t.insert("steps".into(), 6.into());
}

pub fn set(t: &mut toml::Table, table: &str, key: &str, v: impl Into<toml::Value>) {
    t.get_mut(table).unwrap().as_table_mut().unwrap().insert(key.into(), v.into());
}

/// Straight track at a constant speed, 6-hourly.
pub fn straight(storm: &str, member: MemberId, start: GeoPoint, bearing: f64, km_per_step: f64, n: usize) -> Track {
    let mut t = Track::new(storm, member);
    for k in 0..n {
        t.points.push(TrackPoint {
            valid_time: t0() + Duration::hours(6 * k as i64),
            center: destination(start, bearing, km_per_step * k as f64),
            min_msl: 98000.0,
            max_ws10m: 30.0,
            phase: Phase::Tropical,
        });
    }
    t
}

/// Copy of `t` with every point moved `km` toward `bearing`.
pub fn shifted(t: &Track, member: MemberId, bearing: f64, km: f64) -> Track {
    let mut s = t.clone();
    s.member = member;
    for p in &mut s.points {
        p.center = destination(p.center, bearing, km);
    }
    s
}

pub fn write_tracks(path: &Path, tracks: &[&Track]) {
    std::fs::write(path, tracks_to_string(tracks).unwrap()).unwrap();
}

/// Writes every field under `dir/<prefix>` and a manifest listing one
/// member per entry of `members`.
pub fn write_manifest(dir: &Path, name: &str, members: &[Vec<Field>]) -> PathBuf {
    std::fs::create_dir_all(dir.join(name)).unwrap();
    let mut files = Vec::new();
    for (m, fields) in members.iter().enumerate() {
        let mut entries = Vec::new();
        for f in fields {
            let rel = format!("{name}/m{m}_{}_{}_{}.gsf", f.variable, f.level, f.valid_time.format("%Y%m%d%H"));
            write_gsf(&dir.join(&rel), f).unwrap();
            entries.push(ManifestEntry { path: rel, variable: f.variable, level: f.level, valid_time: f.valid_time });
        }
        files.push(MemberFiles { member: m as u32, files: entries });
    }
    let manifest = RunManifest { storm_id: None, init_time: t0(), land_mask: None, members: files };
    let p = dir.join(format!("{name}.json"));
    manifest.save(&p).unwrap();
    p
}

pub fn gsf(path: &Path) -> Field {
    read_gsf(path).unwrap()
}

pub fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

/// Report body with the metadata block removed.
pub fn body(path: &Path) -> Value {
    without_metadata(&std::fs::read_to_string(path).unwrap()).unwrap()
}

pub fn csv_rows(path: &Path) -> Vec<std::collections::HashMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.deserialize().map(|x| x.unwrap()).collect()
}
