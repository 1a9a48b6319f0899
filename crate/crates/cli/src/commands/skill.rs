//! `tcens skill`: ROC area skill of tercile-event probabilities, pooled over
//! grid points and initializations at each lead time.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use chrono::{DateTime, Duration, Utc};
use log::{info, warn};
use serde::Serialize;
use tcens::grid::gsf::RunManifest;
use tcens::grid::{Field, FieldSet, Level, Variable};
use tcens::par;
use tcens::probskill::{roca, rocass, tercile_thresholds, RocTally, Sense};

use super::open_manifest;
use crate::args::SkillArgs;
use crate::config::{leads, parse_var, pick, pick_vec, require, FileConfig, Region};
use crate::report::{provenance, write_csv, write_json};
use crate::Outcome;

const STEP_H: i64 = 6;
const DEFAULT_VARS: [&str; 3] = ["MSL", "T@850", "Z@500"];

type Key = (Variable, Level);
type TallyKey = (Key, Sense, i64);

/// All field sets of every member, keyed by valid time.
fn load_all(m: &RunManifest, base: &Path, wanted: &[Key]) -> Result<Vec<BTreeMap<DateTime<Utc>, FieldSet>>> {
    par::map(&m.members, |mf| -> Result<_> {
        Ok(m.load_member(base, mf, Some(wanted))?.into_iter().map(|s| (s.valid_time, s)).collect())
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Serialize)]
struct SkillParams {
    variables: Vec<String>,
    leads_h: Vec<i64>,
    region: Option<Region>,
    climatology: String,
    thresholds: &'static str,
    pooling: &'static str,
}

#[derive(Debug, Clone, Serialize)]
struct SkillRow {
    variable: Variable,
    level: Level,
    sense: Sense,
    lead_h: i64,
    roca: Option<f64>,
    rocass: Option<f64>,
    n_events: u64,
    n_total: u64,
}

#[derive(Debug, Serialize)]
struct RocPointRow {
    variable: Variable,
    level: Level,
    sense: Sense,
    lead_h: i64,
    threshold: f64,
    pofd: f64,
    pod: f64,
}

#[derive(Debug, Serialize)]
struct SkillReport {
    params: SkillParams,
    scores: Vec<SkillRow>,
}

pub fn run(args: SkillArgs, file: &FileConfig, out: &Path) -> Result<Outcome> {
    let forecasts = pick_vec(args.forecast, file.forecast.clone());
    if forecasts.is_empty() {
        bail!("missing required input: --forecast");
    }
    let truth_path = require(pick(args.truth, file.truth.clone()), "--truth")?;
    let clim_path = pick(args.climatology, file.climatology.clone()).unwrap_or_else(|| truth_path.clone());
    let var_names = {
        let v = pick_vec(args.vars, file.vars.clone());
        if v.is_empty() {
            DEFAULT_VARS.iter().map(|s| s.to_string()).collect()
        } else {
            v
        }
    };
    let vars: Vec<Key> = var_names.iter().map(|s| parse_var(s)).collect::<Result<_>>()?;
    let leads_h = leads(pick(args.lead_start, file.lead_start), pick(args.lead_end, file.lead_end), STEP_H)?;
    let region = pick(args.region, file.region.clone()).map(|s| Region::parse(&s)).transpose()?;

    // validate every manifest before loading data
    let (truth_m, truth_base) = open_manifest(&truth_path, &vars)?;
    let (clim_m, clim_base) = open_manifest(&clim_path, &vars)?;
    let fc: Vec<(RunManifest, PathBuf)> = forecasts.iter().map(|p| open_manifest(p, &vars)).collect::<Result<_>>()?;
    let n_members = fc[0].0.members.len();
    if let Some((m, _)) = fc.iter().find(|(m, _)| m.members.len() != n_members) {
        bail!("forecast manifests differ in ensemble size ({} vs {n_members})", m.members.len());
    }

    let truth: BTreeMap<DateTime<Utc>, FieldSet> =
        load_all(&truth_m, &truth_base, &vars)?.into_iter().next().context("truth manifest has no members")?;
    let clim = load_all(&clim_m, &clim_base, &vars)?;
    let mut terciles: BTreeMap<Key, (Field, Field)> = BTreeMap::new();
    for &key in &vars {
        let sample: Vec<Field> =
            clim.iter().flat_map(|m| m.values()).map(|s| s.get(key.0, key.1).cloned()).collect::<Result<_, _>>()?;
        let t = tercile_thresholds(&sample).with_context(|| format!("tercile climatology of {}@{}", key.0, key.1))?;
        terciles.insert(key, t);
    }
    let spec = terciles.values().next().map(|t| t.0.spec).context("no variables requested")?;
    let points: Vec<usize> = (0..spec.nlat)
        .flat_map(|i| (0..spec.nlon).map(move |j| (i, j)))
        .filter(|&(i, j)| region.is_none_or(|r| r.contains(spec.point(i, j))))
        .map(|(i, j)| spec.index(i, j))
        .collect();
    if points.is_empty() {
        bail!("the pooling region contains no grid points");
    }

    let mut tallies: BTreeMap<TallyKey, RocTally> = BTreeMap::new();
    for (path, (m, base)) in forecasts.iter().zip(&fc) {
        let members = load_all(m, base, &vars)?;
        let per_lead = par::map(&leads_h, |&lead| -> Result<Vec<(TallyKey, RocTally)>> {
            let t = m.init_time + Duration::hours(lead);
            let Some(obs) = truth.get(&t) else { return Ok(Vec::new()) };
            let sets: Vec<&FieldSet> = members.iter().filter_map(|s| s.get(&t)).collect();
            if sets.len() != members.len() {
                return Ok(Vec::new());
            }
            let mut out = Vec::new();
            for &key in &vars {
                let o = obs.get(key.0, key.1)?;
                let fields: Vec<&Field> = sets.iter().map(|s| s.get(key.0, key.1)).collect::<tcens::Result<_>>()?;
                let (lo, hi) = &terciles[&key];
                for sense in [Sense::Upper, Sense::Lower] {
                    let thr = if sense == Sense::Upper { hi } else { lo };
                    let mut tally = RocTally::new(members.len());
                    for &k in &points {
                        if thr.mask.as_ref().is_some_and(|mk| mk[k]) {
                            continue;
                        }
                        let th = thr.values[k];
                        let yes = fields.iter().filter(|f| sense.is_event(f.values[k], th)).count();
                        tally.add(yes, sense.is_event(o.values[k], th));
                    }
                    out.push(((key, sense, lead), tally));
                }
            }
            Ok(out)
        });
        let mut used = 0;
        for r in per_lead {
            let r = r?;
            used += !r.is_empty() as usize;
            for (k, t) in r {
                match tallies.get_mut(&k) {
                    Some(acc) => acc.merge(&t)?,
                    None => {
                        tallies.insert(k, t);
                    }
                }
            }
        }
        if used == 0 {
            warn!("{}: no lead time had matching truth fields", path.display());
        }
    }

    let mut scores = Vec::new();
    let mut roc_rows = Vec::new();
    for (&((variable, level), sense, lead_h), tally) in &tallies {
        let (a, s) = match tally.curve() {
            Ok(c) => {
                if args.roc_points {
                    for (&(pofd, pod), &threshold) in c.points.iter().zip(&c.thresholds) {
                        roc_rows.push(RocPointRow { variable, level, sense, lead_h, threshold, pofd, pod });
                    }
                }
                let a = roca(&c);
                (Some(a), Some(rocass(a)?))
            }
            Err(tcens::Error::DegenerateOutcomes) => (None, None),
            Err(e) => return Err(e.into()),
        };
        scores.push(SkillRow {
            variable,
            level,
            sense,
            lead_h,
            roca: a,
            rocass: s,
            n_events: tally.n_events(),
            n_total: tally.n_total(),
        });
    }
    // stable order: variable, level, sense, lead
    scores.sort_by_key(|a| (a.variable, a.level, a.sense, a.lead_h));

    write_csv(&out.join("skill.csv"), &scores)?;
    if args.roc_points {
        write_csv(&out.join("roc_points.csv"), &roc_rows)?;
    }
    let params = SkillParams {
        variables: vars.iter().map(|(v, l)| format!("{v}@{l}")).collect(),
        leads_h,
        region,
        climatology: clim_path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        thresholds: "M+2 ensemble-fraction thresholds",
        pooling: "all region grid points and initializations at each lead",
    };
    let mut inputs: Vec<&Path> = forecasts.iter().map(PathBuf::as_path).collect();
    inputs.push(&truth_path);
    if clim_path != truth_path {
        inputs.push(&clim_path);
    }
    let prov = provenance(&params, &inputs)?;
    let n = scores.len();
    write_json(&out.join("skill.json"), &prov, &SkillReport { params, scores })?;
    info!("scored {n} (variable, sense, lead) combinations");
    Ok(Outcome::Success)
}
