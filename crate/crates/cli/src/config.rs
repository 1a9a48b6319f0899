//! Run configuration file and its merge with command-line flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use tcens::grid::{GeoPoint, GridSpec, Level, Variable};
use tcens::tracker::{SteeringLevel, TrackerConfig};

use crate::args::TrackerFlags;

/// Optional settings read from `--config`. Relative paths are resolved
/// against the file's directory.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub threads: Option<usize>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub manifest: Option<PathBuf>,
    pub obs: Option<PathBuf>,
    pub storm: Option<String>,
    pub tracks: Option<Vec<PathBuf>>,
    pub compare: Option<Vec<PathBuf>>,
    pub forecast: Option<Vec<PathBuf>>,
    pub truth: Option<PathBuf>,
    pub climatology: Option<PathBuf>,
    pub scenario: Option<PathBuf>,
    pub members: Option<usize>,
    pub lead_start: Option<i64>,
    pub lead_end: Option<i64>,
    pub strike_radius_km: Option<f64>,
    pub strike_grid: Option<String>,
    pub vars: Option<Vec<String>>,
    pub region: Option<String>,
    pub level: Option<u16>,
    pub epsilon: Option<f64>,
    /// Partial tracker settings layered over the defaults.
    pub tracker: Option<toml::Table>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: Self = toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in
            [&mut cfg.out, &mut cfg.manifest, &mut cfg.obs, &mut cfg.truth, &mut cfg.climatology, &mut cfg.scenario]
                .into_iter()
                .flatten()
        {
            fix(p);
        }
        for v in [&mut cfg.tracks, &mut cfg.compare, &mut cfg.forecast].into_iter().flatten() {
            v.iter_mut().for_each(fix);
        }
        Ok(cfg)
    }
}

/// Flag if given, else config file, else nothing.
pub fn pick<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

pub fn pick_vec<T>(flag: Vec<T>, file: Option<Vec<T>>) -> Vec<T> {
    if flag.is_empty() {
        file.unwrap_or_default()
    } else {
        flag
    }
}

pub fn require<T>(v: Option<T>, what: &str) -> Result<T> {
    match v {
        Some(v) => Ok(v),
        None => bail!("missing required input: {what}"),
    }
}

/// Tracker settings: defaults, then the config file's `[tracker]` table,
/// then flags.
pub fn tracker_config(file: Option<&toml::Table>, flags: &TrackerFlags) -> Result<TrackerConfig> {
    let mut cfg: TrackerConfig = match file {
        Some(t) => t.clone().try_into().context("invalid [tracker] table")?,
        None => TrackerConfig::default(),
    };
    macro_rules! set {
        ($($f:ident),*) => { $( if let Some(v) = flags.$f { cfg.$f = v; } )* };
    }
    set!(
        search_radius_km,
        criteria_radius_km,
        vort_threshold,
        wind10m_threshold,
        coarsen_factor,
        max_displacement_factor
    );
    if let Some(s) = &flags.steering {
        cfg.steering_levels = parse_steering(s)?;
    }
    if flags.thickness_when_et {
        cfg.require_thickness_max_when_extratropical = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn parse_steering(s: &str) -> Result<Vec<SteeringLevel>> {
    s.split(',')
        .map(|part| {
            let (lev, w) =
                part.split_once(':').with_context(|| format!("steering entry '{part}' is not LEVEL:WEIGHT"))?;
            Ok(SteeringLevel { level_hpa: lev.trim().parse()?, weight: w.trim().parse()? })
        })
        .collect()
}

/// Lead window in hours, stepping by `step`.
pub fn leads(start: Option<i64>, end: Option<i64>, step: i64) -> Result<Vec<i64>> {
    let (s, e) = (start.unwrap_or(step), end.unwrap_or(120));
    if s % step != 0 || e % step != 0 {
        bail!("lead window {s}..{e} h is not a multiple of {step} h");
    }
    if s < 0 || e < s {
        bail!("empty lead window {s}..{e} h");
    }
    Ok((s / step..=e / step).map(|k| k * step).collect())
}

/// Latitude-longitude box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Region {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl Region {
    pub fn parse(s: &str) -> Result<Self> {
        let v = floats(s, 4)?;
        if v[0] > v[1] || v[2] > v[3] {
            bail!("region '{s}' has min above max");
        }
        Ok(Self { lat_min: v[0], lat_max: v[1], lon_min: v[2], lon_max: v[3] })
    }

    pub fn contains(&self, p: GeoPoint) -> bool {
        let lon = if p.lon < self.lon_min { p.lon + 360.0 } else { p.lon };
        p.lat >= self.lat_min && p.lat <= self.lat_max && lon >= self.lon_min && lon <= self.lon_max
    }
}

fn floats(s: &str, n: usize) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("'{s}' is not a list of numbers"))?;
    if v.len() != n {
        bail!("'{s}' needs {n} comma-separated numbers");
    }
    Ok(v)
}

pub fn parse_grid(s: &str) -> Result<GridSpec> {
    let v = floats(s, 6)?;
    Ok(GridSpec::new(v[0], v[1], v[2], v[3], v[4] as usize, v[5] as usize, false)?)
}

/// `NAME` or `NAME@LEVEL`; a bare name is a surface field.
pub fn parse_var(s: &str) -> Result<(Variable, Level)> {
    let (name, level) = match s.split_once('@') {
        Some((n, l)) => (n, l.parse::<Level>()?),
        None => (s, Level::Surface),
    };
    Ok((name.trim().parse::<Variable>()?, level))
}
