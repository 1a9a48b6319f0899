//! `tcens verify`: track errors, spread, along/cross-track statistics,
//! strike probabilities, and an optional two-system significance test.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::info;
use serde::Serialize;
use tcens::grid::gsf::write_gsf;
use tcens::grid::GridSpec;
use tcens::tracker::{EnsembleTrackSet, MemberId, Track};
use tcens::verify::{
    acc_error, acc_spread, mann_whitney_u, merge_strike, strike_probability, summarize_leads, track_error_samples,
    LeadSummary, MannWhitney, StrikeProbabilityField, TrackErrorSample, DEFAULT_IMPACT_RADIUS_KM,
};

use super::track::{load_tracks, stamp};
use crate::args::VerifyArgs;
use crate::config::{leads, parse_grid, pick, pick_vec, require, FileConfig};
use crate::error::CliError;
use crate::report::{provenance, write_csv, write_json};
use crate::Outcome;

const STEP_H: i64 = 6;

/// Ensemble sets of one track file, one per storm, checked against the
/// observed tracks.
fn load_cases(path: &Path, obs: &BTreeMap<String, Track>) -> Result<Vec<EnsembleTrackSet>> {
    let mut by_storm: BTreeMap<String, Vec<Track>> = BTreeMap::new();
    for t in load_tracks(path)? {
        if let MemberId::Member(_) = t.member {
            by_storm.entry(t.storm_id.clone()).or_default().push(t);
        }
    }
    if by_storm.is_empty() {
        bail!("{}: no member tracks", path.display());
    }
    by_storm
        .into_iter()
        .map(|(storm, members)| {
            let o = obs.get(&storm).ok_or_else(|| CliError::UnmatchedStorm(storm.clone()))?;
            let init = members.iter().filter_map(Track::first_time).min().context("member tracks are empty")?;
            let o0 = o.first_time().context("observed track is empty")?;
            for m in &members {
                for p in &m.points {
                    if (p.valid_time - o0).num_seconds() % (STEP_H * 3600) != 0 {
                        bail!(tcens::Error::TimeMisalignment(format!(
                            "{storm} member {}: {} is off the observed {STEP_H} h grid",
                            m.member,
                            p.valid_time.to_rfc3339()
                        )));
                    }
                }
            }
            Ok(EnsembleTrackSet::from_members(storm, init, members)?)
        })
        .collect()
}

fn load_obs(path: &Path) -> Result<BTreeMap<String, Track>> {
    let mut obs = BTreeMap::new();
    for t in load_tracks(path)? {
        // prefer explicit OBS rows when a file mixes members
        if t.member == MemberId::Obs || !obs.contains_key(&t.storm_id) {
            obs.insert(t.storm_id.clone(), t);
        }
    }
    Ok(obs)
}

/// Bounding box of every track point, padded and snapped to 0.25 degrees.
fn default_strike_grid(cases: &[EnsembleTrackSet]) -> Result<GridSpec> {
    let pts: Vec<_> =
        cases.iter().flat_map(|c| c.members.iter().flat_map(|m| m.points.iter().map(|p| p.center))).collect();
    let (mut la0, mut la1, mut lo0, mut lo1) = (90.0f64, -90.0f64, 180.0f64, -180.0f64);
    for p in &pts {
        la0 = la0.min(p.lat);
        la1 = la1.max(p.lat);
        lo0 = lo0.min(p.lon);
        lo1 = lo1.max(p.lon);
    }
    let r = 0.25;
    let la0 = ((la0 - 3.0) / r).floor() * r;
    let la1 = ((la1 + 3.0) / r).ceil() * r;
    let lo0 = ((lo0 - 3.0) / r).floor() * r;
    let lo1 = ((lo1 + 3.0) / r).ceil() * r;
    let la0 = la0.max(-90.0);
    let nlat = ((la1.min(90.0) - la0) / r).round() as usize + 1;
    let nlon = ((lo1 - lo0) / r).round() as usize + 1;
    Ok(GridSpec::new(la0, lo0, r, r, nlat, nlon, false)?)
}

#[derive(Debug, Serialize)]
struct VerifyParams {
    leads_h: Vec<i64>,
    strike_radius_km: f64,
    strike_grid: GridSpec,
    pooling: &'static str,
    significance_metric: &'static str,
}

#[derive(Debug, Serialize)]
struct Accumulated {
    leads_h: Vec<i64>,
    acc_error_km: f64,
    acc_spread_km: f64,
}

#[derive(Debug, Serialize)]
struct Significance {
    metric: String,
    lead_h: Option<i64>,
    n_a: usize,
    n_b: usize,
    #[serde(rename = "U")]
    u: f64,
    p: f64,
    method: tcens::verify::PMethod,
}

#[derive(Debug, Serialize)]
struct StrikeOutput {
    storm_id: String,
    init_time: String,
    file: String,
    max_percent: f64,
}

#[derive(Debug, Serialize)]
struct VerifyReport {
    params: VerifyParams,
    leads: Vec<LeadSummary>,
    accumulated: Option<Accumulated>,
    significance: Vec<Significance>,
    strike: Vec<StrikeOutput>,
    samples: Vec<TrackErrorSample>,
}

#[derive(Debug, Serialize)]
struct LeadRow {
    lead_h: i64,
    error_km: f64,
    spread_km: f64,
    n_cases: usize,
    at_mean_km: Option<f64>,
    at_median_km: Option<f64>,
    ct_mean_km: Option<f64>,
    ct_median_km: Option<f64>,
}

#[derive(Debug, Serialize)]
struct SampleRow<'a> {
    storm_id: &'a str,
    init_time: String,
    lead_h: i64,
    error_km: f64,
    spread_km: f64,
    n_members: usize,
    at_km: Option<f64>,
    ct_km: Option<f64>,
    dpe_km: f64,
}

fn significance(a: &[TrackErrorSample], b: &[TrackErrorSample], leads_h: &[i64]) -> Result<Vec<Significance>> {
    let mut out = Vec::new();
    let mut test = |lead: Option<i64>| -> Result<()> {
        let pick = |s: &[TrackErrorSample]| -> Vec<f64> {
            s.iter().filter(|x| lead.is_none_or(|l| x.lead_h == l)).map(|x| x.error_km).collect()
        };
        let (xa, xb) = (pick(a), pick(b));
        if xa.is_empty() || xb.is_empty() {
            return Ok(());
        }
        let MannWhitney { u, p, method, .. } = mann_whitney_u(&xa, &xb)?;
        out.push(Significance { metric: "error_km".into(), lead_h: lead, n_a: xa.len(), n_b: xb.len(), u, p, method });
        Ok(())
    };
    for &l in leads_h {
        test(Some(l))?;
    }
    test(None)?;
    Ok(out)
}

pub fn run(args: VerifyArgs, file: &FileConfig, out: &Path) -> Result<Outcome> {
    let track_files = pick_vec(args.tracks, file.tracks.clone());
    if track_files.is_empty() {
        bail!("missing required input: --tracks");
    }
    let obs_path = require(pick(args.obs, file.obs.clone()), "--obs")?;
    let compare_files: Vec<PathBuf> = pick_vec(args.compare, file.compare.clone());
    let leads_h = leads(pick(args.lead_start, file.lead_start), pick(args.lead_end, file.lead_end), STEP_H)?;
    let radius = pick(args.strike_radius_km, file.strike_radius_km).unwrap_or(DEFAULT_IMPACT_RADIUS_KM);

    let obs = load_obs(&obs_path)?;
    let mut cases = Vec::new();
    for f in &track_files {
        cases.extend(load_cases(f, &obs)?);
    }
    let mut cases_b = Vec::new();
    for f in &compare_files {
        cases_b.extend(load_cases(f, &obs)?);
    }
    let grid = match pick(args.strike_grid, file.strike_grid.clone()) {
        Some(s) => parse_grid(&s)?,
        None => default_strike_grid(&cases)?,
    };

    let mut samples = Vec::new();
    for c in &cases {
        samples.extend(track_error_samples(c, &obs[&c.storm_id], &leads_h)?);
    }
    let mut samples_b = Vec::new();
    for c in &cases_b {
        samples_b.extend(track_error_samples(c, &obs[&c.storm_id], &leads_h)?);
    }
    let lead_stats = summarize_leads(&samples, &leads_h);
    let accumulated = if lead_stats.is_empty() {
        None
    } else {
        Some(Accumulated {
            leads_h: lead_stats.iter().map(|l| l.lead_h).collect(),
            acc_error_km: acc_error(&lead_stats.iter().map(|l| l.error_km).collect::<Vec<_>>())?,
            acc_spread_km: acc_spread(&lead_stats.iter().map(|l| l.spread_km).collect::<Vec<_>>())?,
        })
    };
    let sig = if cases_b.is_empty() { Vec::new() } else { significance(&samples, &samples_b, &leads_h)? };

    let mut strike_fields: Vec<StrikeProbabilityField> = Vec::new();
    let mut strike = Vec::new();
    for c in &cases {
        let f = strike_probability(c, &grid, radius)?;
        let name = format!("strike/{}_{}.gsf", c.storm_id, stamp(c.init_time));
        write_gsf(&out.join(&name), &f.to_field(c.init_time)?)?;
        strike.push(StrikeOutput {
            storm_id: c.storm_id.clone(),
            init_time: c.init_time.to_rfc3339(),
            file: name,
            max_percent: f.prob.iter().copied().fold(0.0, f64::max),
        });
        strike_fields.push(f);
    }
    if let Some(first) = cases.iter().map(|c| c.init_time).min() {
        let merged = merge_strike(&strike_fields)?;
        write_gsf(&out.join("strike/merged.gsf"), &merged.to_field(first)?)?;
    }

    let rows: Vec<LeadRow> = lead_stats
        .iter()
        .map(|l| LeadRow {
            lead_h: l.lead_h,
            error_km: l.error_km,
            spread_km: l.spread_km,
            n_cases: l.n_cases,
            at_mean_km: l.at_stats.map(|s| s.mean),
            at_median_km: l.at_stats.map(|s| s.median),
            ct_mean_km: l.ct_stats.map(|s| s.mean),
            ct_median_km: l.ct_stats.map(|s| s.median),
        })
        .collect();
    write_csv(&out.join("verify_leads.csv"), &rows)?;
    let srows: Vec<SampleRow> = samples
        .iter()
        .map(|s| SampleRow {
            storm_id: &s.storm_id,
            init_time: s.init_time.to_rfc3339(),
            lead_h: s.lead_h,
            error_km: s.error_km,
            spread_km: s.spread_km,
            n_members: s.n_members,
            at_km: s.at_km,
            ct_km: s.ct_km,
            dpe_km: s.dpe_km,
        })
        .collect();
    write_csv(&out.join("verify_samples.csv"), &srows)?;
    if !sig.is_empty() {
        write_csv(&out.join("verify_significance.csv"), &sig)?;
    }

    let params = VerifyParams {
        leads_h: leads_h.clone(),
        strike_radius_km: radius,
        strike_grid: grid,
        pooling: "cases are (storm_id, init_time) pairs; per-lead metrics are RMS over cases",
        significance_metric: "error_km",
    };
    let mut inputs: Vec<&Path> = track_files.iter().map(PathBuf::as_path).collect();
    inputs.push(&obs_path);
    inputs.extend(compare_files.iter().map(PathBuf::as_path));
    let prov = provenance(&params, &inputs)?;
    let n_cases = cases.len();
    let report = VerifyReport { params, leads: lead_stats, accumulated, significance: sig, strike, samples };
    write_json(&out.join("verification.json"), &prov, &report)?;
    info!("verified {n_cases} cases over {} leads", leads_h.len());
    Ok(Outcome::Success)
}
