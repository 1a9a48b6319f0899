//! `tcens energy`: moist turbulent energy of ensemble perturbations at each
//! valid time of a forecast manifest.

use std::path::Path;

use anyhow::{bail, Result};
use chrono::{DateTime, Utc};
use log::info;
use serde::Serialize;
use tcens::energy::{ensemble_mte, mte_terms, perturbations, MteParams, MTE_VARIABLES};
use tcens::grid::gsf::write_gsf;
use tcens::grid::{Field, FieldSet, Level};
use tcens::par;

use super::open_manifest;
use super::track::stamp;
use crate::args::EnergyArgs;
use crate::config::{pick, require, FileConfig, Region};
use crate::report::{provenance, write_csv, write_json};
use crate::Outcome;

const DEFAULT_LEVEL: u16 = 850;

#[derive(Debug, Serialize)]
struct EnergyParams {
    level_hpa: u16,
    mte: MteParams,
    region: Option<Region>,
}

#[derive(Debug, Clone, Serialize)]
struct EnergyRow {
    valid_time: DateTime<Utc>,
    lead_h: i64,
    mte: f64,
    kinetic: f64,
    thermal: f64,
    latent: f64,
}

#[derive(Debug, Serialize)]
struct EnergyReport {
    params: EnergyParams,
    n_members: usize,
    series: Vec<EnergyRow>,
    files: Vec<String>,
}

/// Mean over unmasked points inside `region`.
fn region_mean(f: &Field, region: Option<&Region>) -> f64 {
    let spec = f.spec;
    let (mut s, mut n) = (0.0, 0usize);
    for i in 0..spec.nlat {
        for j in 0..spec.nlon {
            if f.is_masked(i, j) || region.is_some_and(|r| !r.contains(spec.point(i, j))) {
                continue;
            }
            s += f.get(i, j);
            n += 1;
        }
    }
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

pub fn run(args: EnergyArgs, file: &FileConfig, out: &Path) -> Result<Outcome> {
    let manifest_path = require(pick(args.manifest, file.manifest.clone()), "--manifest")?;
    let level_hpa = pick(args.level, file.level).unwrap_or(DEFAULT_LEVEL);
    let level = Level::Hpa(level_hpa);
    let params = MteParams { epsilon: pick(args.epsilon, file.epsilon).unwrap_or(1.0), ..MteParams::default() };
    params.validate()?;
    let region = pick(args.region, file.region.clone()).map(|s| Region::parse(&s)).transpose()?;

    let wanted: Vec<_> = MTE_VARIABLES.iter().map(|&v| (v, level)).collect();
    let (manifest, base) = open_manifest(&manifest_path, &wanted)?;
    if manifest.members.len() < 2 {
        return Err(tcens::Error::TooFewMembers { needed: 2, got: manifest.members.len() }.into());
    }
    let members: Vec<Vec<FieldSet>> = par::map(&manifest.members, |m| manifest.load_member(&base, m, Some(&wanted)))
        .into_iter()
        .collect::<tcens::Result<_>>()?;
    let times: Vec<DateTime<Utc>> = members[0].iter().map(|s| s.valid_time).collect();
    for (m, sets) in manifest.members.iter().zip(&members) {
        if sets.len() != times.len() || sets.iter().zip(&times).any(|(s, t)| s.valid_time != *t) {
            bail!(tcens::Error::TimeMisalignment(format!(
                "member {} valid times differ from member {}",
                m.member, manifest.members[0].member
            )));
        }
    }

    let dir = out.join("energy");
    let mut series = Vec::new();
    let mut files = Vec::new();
    for (k, &t) in times.iter().enumerate() {
        let at_t: Vec<FieldSet> = members.iter().map(|m| m[k].clone()).collect();
        let pert = perturbations(&at_t, level, &MTE_VARIABLES)?;
        let field = ensemble_mte(&pert, &params)?;
        let terms = par::map(&pert, |p| mte_terms(p, &params)).into_iter().collect::<tcens::Result<Vec<_>>>()?;
        let m = terms.len() as f64;
        let mean_of = |pick: fn(&tcens::energy::MteTerms) -> &Field| {
            terms.iter().map(|x| region_mean(pick(x), region.as_ref())).sum::<f64>() / m
        };
        series.push(EnergyRow {
            valid_time: t,
            lead_h: (t - manifest.init_time).num_hours(),
            mte: region_mean(&field, region.as_ref()),
            kinetic: mean_of(|x| &x.kinetic),
            thermal: mean_of(|x| &x.thermal),
            latent: mean_of(|x| &x.latent),
        });
        let name = format!("MTE_{level_hpa}_{}.gsf", stamp(t));
        write_gsf(&dir.join(&name), &field)?;
        files.push(format!("energy/{name}"));
    }

    write_csv(&out.join("energy_series.csv"), &series)?;
    let params = EnergyParams { level_hpa, mte: params, region };
    let prov = provenance(&params, &[manifest_path.as_path()])?;
    let n = series.len();
    write_json(&out.join("energy.json"), &prov, &EnergyReport { params, n_members: members.len(), series, files })?;
    info!("wrote energy at {n} valid times to {}", out.display());
    Ok(Outcome::Success)
}
