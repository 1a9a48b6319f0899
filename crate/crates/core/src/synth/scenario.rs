//! Scenario files: one TOML document describing grid, vortex, motion,
//! noise, and ensemble size, expanded into GSF rasters, manifests, and
//! track CSVs.

use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::ensemble::{gen_ensemble, member_fields, EnsembleNoiseSpec};
use super::truth::{advect_truth, Motion, TruthScenario};
use super::vortex::VortexSpec;
use crate::error::{Error, Result};
use crate::grid::gsf::{atomic_write, write_gsf, ManifestEntry, MemberFiles, RunManifest};
use crate::grid::{Field, FieldSet, GeoPoint, GridSpec, Level, Variable};
use crate::par;
use crate::tracker::csv::tracks_to_string;
use crate::tracker::{EnsembleTrackSet, Track};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub lat0: f64,
    pub lon0: f64,
    pub dlat: f64,
    pub dlon: f64,
    pub nlat: usize,
    pub nlon: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VortexConfig {
    pub lat: f64,
    pub lon: f64,
    pub central_pressure_pa: f64,
    pub ambient_pressure_pa: f64,
    pub rmw_km: f64,
    pub peak_wind_ms: f64,
    #[serde(default = "one")]
    pub shape_b: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionConfig {
    pub bearing_deg: f64,
    pub speed_ms: f64,
    #[serde(default)]
    pub dissipate_after: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub sigma_growth_km: f64,
    #[serde(default)]
    pub intensity_sigma_pa: f64,
}

/// Rectangle marked as land in the emitted land mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandBox {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub storm_id: String,
    pub init_time: DateTime<Utc>,
    pub seed: u64,
    pub members: usize,
    pub steps: usize,
    #[serde(default = "six")]
    pub step_hours: i64,
    /// Write per-member field rasters (needed for tracking and MTE).
    #[serde(default = "yes")]
    pub member_fields: bool,
    pub grid: GridConfig,
    pub vortex: VortexConfig,
    pub motion: MotionConfig,
    pub noise: NoiseConfig,
    #[serde(default)]
    pub land: Option<LandBox>,
}

fn six() -> i64 {
    6
}

fn yes() -> bool {
    true
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid_spec()?;
        self.vortex_spec()?.validate()?;
        self.noise_spec().validate()?;
        if self.members < 2 {
            return Err(Error::TooFewMembers { needed: 2, got: self.members });
        }
        if self.steps == 0 || self.step_hours <= 0 {
            return Err(Error::Config("steps and step_hours must be positive".into()));
        }
        Ok(())
    }

    pub fn grid_spec(&self) -> Result<GridSpec> {
        let g = &self.grid;
        GridSpec::new(g.lat0, g.lon0, g.dlat, g.dlon, g.nlat, g.nlon, false)
    }

    pub fn vortex_spec(&self) -> Result<VortexSpec> {
        let v = &self.vortex;
        Ok(VortexSpec {
            center: GeoPoint::try_new(v.lat, v.lon)?,
            central_pressure: v.central_pressure_pa,
            ambient_pressure: v.ambient_pressure_pa,
            radius_max_wind_km: v.rmw_km,
            peak_wind: v.peak_wind_ms,
            shape_b: v.shape_b,
        })
    }

    pub fn noise_spec(&self) -> EnsembleNoiseSpec {
        EnsembleNoiseSpec {
            sigma_growth_km: self.noise.sigma_growth_km,
            intensity_sigma_pa: self.noise.intensity_sigma_pa,
            seed: self.seed,
        }
    }

    pub fn truth_scenario(&self) -> Result<TruthScenario> {
        Ok(TruthScenario {
            vortex: self.vortex_spec()?,
            motion: Motion { bearing_deg: self.motion.bearing_deg, speed_ms: self.motion.speed_ms },
            steps: self.steps,
            step_hours: self.step_hours,
            dissipate_after: self.motion.dissipate_after,
        })
    }

    pub fn land_mask(&self, time: DateTime<Utc>) -> Result<Option<Field>> {
        let Some(b) = &self.land else { return Ok(None) };
        let spec = self.grid_spec()?;
        Field::from_fn(spec, Variable::Lsm, Level::Surface, time, |lat, lon| {
            (lat >= b.lat_min && lat <= b.lat_max && lon >= b.lon_min && lon <= b.lon_max) as u8 as f64
        })
        .map(Some)
    }
}

/// Paths written by [`write_scenario`], relative to the output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutputs {
    pub truth_track: PathBuf,
    pub ensemble_tracks: PathBuf,
    pub truth_manifest: PathBuf,
    pub forecast_manifest: Option<PathBuf>,
}

fn file_name(var: Variable, level: Level, t: DateTime<Utc>) -> String {
    let lev = match level {
        Level::Surface => "sfc".to_string(),
        Level::Hpa(p) => p.to_string(),
    };
    format!("{var}_{lev}_{}.gsf", t.format("%Y%m%d%H"))
}

/// Writes every field of `sets` under `base/dir` and returns manifest
/// entries relative to `base`.
fn write_sets(base: &Path, dir: &str, sets: &[FieldSet]) -> Result<Vec<ManifestEntry>> {
    let mut entries = Vec::new();
    for fs in sets {
        for f in fs.fields() {
            let rel = format!("{dir}/{}", file_name(f.variable, f.level, f.valid_time));
            write_gsf(&base.join(&rel), f)?;
            entries.push(ManifestEntry { path: rel, variable: f.variable, level: f.level, valid_time: f.valid_time });
        }
    }
    Ok(entries)
}

/// Truth run and prescribed ensemble for a scenario, without any I/O.
pub fn build_scenario(cfg: &ScenarioConfig) -> Result<(super::truth::TruthRun, EnsembleTrackSet)> {
    cfg.validate()?;
    let truth = advect_truth(&cfg.truth_scenario()?, &cfg.grid_spec()?, cfg.init_time, &cfg.storm_id)?;
    let ens = gen_ensemble(&truth.track, &cfg.noise_spec(), cfg.members)?;
    Ok((truth, ens))
}

/// Expands a scenario into `out`: `truth_track.csv`, `ensemble_tracks.csv`,
/// `truth/manifest.json` with the truth fields, and (when enabled)
/// `forecast/manifest.json` with one field run per member.
pub fn write_scenario(cfg: &ScenarioConfig, out: &Path) -> Result<ScenarioOutputs> {
    let (truth, ens) = build_scenario(cfg)?;
    let spec = cfg.grid_spec()?;
    let land = cfg.land_mask(cfg.init_time)?;
    let land_rel = match &land {
        Some(f) => {
            write_gsf(&out.join("land_mask.gsf"), f)?;
            Some("../land_mask.gsf".to_string())
        }
        None => None,
    };

    let truth_csv = PathBuf::from("truth_track.csv");
    atomic_write(&out.join(&truth_csv), tracks_to_string(&[&truth.track])?.as_bytes())?;
    let ens_csv = PathBuf::from("ensemble_tracks.csv");
    let mut all: Vec<&Track> = ens.members.iter().collect();
    all.push(&ens.mean_track);
    atomic_write(&out.join(&ens_csv), tracks_to_string(&all)?.as_bytes())?;

    let truth_dir = out.join("truth");
    let truth_manifest = RunManifest {
        storm_id: Some(cfg.storm_id.clone()),
        init_time: cfg.init_time,
        land_mask: land_rel.clone(),
        members: vec![MemberFiles { member: 0, files: write_sets(&truth_dir, "fields", &truth.fields)? }],
    };
    let truth_manifest_path = PathBuf::from("truth/manifest.json");
    truth_manifest.save(&out.join(&truth_manifest_path))?;

    let forecast_manifest = if cfg.member_fields {
        let vortex = cfg.vortex_spec()?;
        let dir = out.join("forecast");
        let n_times = cfg.steps + 1;
        let members = par::map(&ens.members, |t| -> Result<MemberFiles> {
            let crate::tracker::MemberId::Member(m) = t.member else { unreachable!() };
            let sets = member_fields(&vortex, t, &spec, n_times, cfg.step_hours)?;
            Ok(MemberFiles { member: m, files: write_sets(&dir, &format!("m{m:03}"), &sets)? })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let manifest = RunManifest {
            storm_id: Some(cfg.storm_id.clone()),
            init_time: cfg.init_time,
            land_mask: land_rel,
            members,
        };
        let rel = PathBuf::from("forecast/manifest.json");
        manifest.save(&out.join(&rel))?;
        Some(rel)
    } else {
        None
    };

    Ok(ScenarioOutputs {
        truth_track: truth_csv,
        ensemble_tracks: ens_csv,
        truth_manifest: truth_manifest_path,
        forecast_manifest,
    })
}

/// Example scenario used by documentation and tests.
pub const EXAMPLE_SCENARIO: &str = r#"storm_id = "SYN01"
init_time = "2018-09-01T00:00:00Z"
seed = 42
members = 8
steps = 12
step_hours = 6
member_fields = true

[grid]
lat0 = 10.0
lon0 = 130.0
dlat = 0.25
dlon = 0.25
nlat = 61
nlon = 81

[vortex]
lat = 15.0
lon = 145.0
central_pressure_pa = 96000.0
ambient_pressure_pa = 101000.0
rmw_km = 50.0
peak_wind_ms = 40.0
shape_b = 1.0

[motion]
bearing_deg = 300.0
speed_ms = 4.0

[noise]
sigma_growth_km = 15.0
intensity_sigma_pa = 150.0
"#;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tracker::csv::read_tracks;

    #[test]
    fn example_parses_and_writes() {
        let mut cfg = ScenarioConfig::from_toml(EXAMPLE_SCENARIO).unwrap();
        cfg.members = 2;
        cfg.steps = 2;
        let dir = tempfile::tempdir().unwrap();
        let out = write_scenario(&cfg, dir.path()).unwrap();
        let truth = read_tracks(std::fs::File::open(dir.path().join(&out.truth_track)).unwrap()).unwrap();
        assert_eq!(truth.len(), 1);
        assert_eq!(truth[0].points.len(), 3);
        let m = RunManifest::load(&dir.path().join(out.forecast_manifest.unwrap())).unwrap();
        assert_eq!(m.members.len(), 2);
        assert!(m.check(&dir.path().join("forecast"), &[(Variable::U, Level::Hpa(850))]).is_empty());
        let sets = m.load_member(&dir.path().join("forecast"), &m.members[1], None).unwrap();
        assert_eq!(sets.len(), 3);
    }

    #[test]
    fn unknown_keys_rejected() {
        let bad = EXAMPLE_SCENARIO.replace("seed = 42", "seed = 42\nsed = 1");
        assert!(matches!(ScenarioConfig::from_toml(&bad), Err(Error::Config(_))));
    }
}
