//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "tcens", version, about = "Track cyclones in ensemble forecasts and verify them")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML run configuration; explicit flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads (0 = all cores). Defaults to `TCENS_THREADS`.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Track one storm through every member of a forecast manifest.
    Track(TrackArgs),
    /// Verify ensemble tracks against observed tracks.
    Verify(VerifyArgs),
    /// ROC skill of tercile-event probabilities.
    Skill(SkillArgs),
    /// Moist turbulent energy of ensemble perturbations.
    Energy(EnergyArgs),
    /// Generate a synthetic scenario.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Args, Default)]
pub struct TrackerFlags {
    #[arg(long)]
    pub search_radius_km: Option<f64>,
    #[arg(long)]
    pub criteria_radius_km: Option<f64>,
    #[arg(long)]
    pub vort_threshold: Option<f64>,
    #[arg(long)]
    pub wind10m_threshold: Option<f64>,
    #[arg(long)]
    pub coarsen_factor: Option<usize>,
    #[arg(long)]
    pub max_displacement_factor: Option<f64>,
    /// Steering levels and weights, e.g. `850:0.5,500:0.5`.
    #[arg(long)]
    pub steering: Option<String>,
    /// Require a thickness maximum while the storm is extratropical.
    #[arg(long)]
    pub thickness_when_et: bool,
}

#[derive(Debug, Clone, Args)]
pub struct TrackArgs {
    /// Forecast manifest (JSON).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Observed track CSV providing the seed and phase flags.
    #[arg(long)]
    pub obs: Option<PathBuf>,
    /// Storm to track; defaults to the manifest's storm_id.
    #[arg(long)]
    pub storm: Option<String>,
    #[command(flatten)]
    pub tracker: TrackerFlags,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Ensemble track CSV, one file per (storm, initialization); repeatable.
    #[arg(long = "tracks", num_args = 1..)]
    pub tracks: Vec<PathBuf>,
    /// Observed track CSV.
    #[arg(long)]
    pub obs: Option<PathBuf>,
    /// Track CSVs of a second system for the significance test.
    #[arg(long = "compare", num_args = 1..)]
    pub compare: Vec<PathBuf>,
    /// First lead time of the accumulation window, hours.
    #[arg(long)]
    pub lead_start: Option<i64>,
    /// Last lead time of the accumulation window, hours.
    #[arg(long)]
    pub lead_end: Option<i64>,
    /// Strike-probability impact radius, km.
    #[arg(long)]
    pub strike_radius_km: Option<f64>,
    /// Strike grid `lat0,lon0,dlat,dlon,nlat,nlon`; defaults to the track
    /// bounding box padded by 3 degrees at 0.25 degrees.
    #[arg(long)]
    pub strike_grid: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SkillArgs {
    /// Forecast manifest (JSON); repeatable for several initializations.
    #[arg(long = "forecast", num_args = 1..)]
    pub forecast: Vec<PathBuf>,
    /// Truth manifest covering every verified valid time.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Manifest whose fields define the tercile climatology; defaults to the
    /// truth manifest.
    #[arg(long)]
    pub climatology: Option<PathBuf>,
    /// Variables as `NAME@LEVEL`, e.g. `MSL,T@850,U@850`.
    #[arg(long, value_delimiter = ',')]
    pub vars: Vec<String>,
    #[arg(long)]
    pub lead_start: Option<i64>,
    #[arg(long)]
    pub lead_end: Option<i64>,
    /// Pooling region `lat_min,lat_max,lon_min,lon_max`.
    #[arg(long)]
    pub region: Option<String>,
    /// Also write every ROC curve point.
    #[arg(long)]
    pub roc_points: bool,
}

#[derive(Debug, Clone, Args)]
pub struct EnergyArgs {
    /// Forecast manifest (JSON).
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Pressure level, hPa.
    #[arg(long)]
    pub level: Option<u16>,
    /// Weight of the moisture term.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Averaging region `lat_min,lat_max,lon_min,lon_max`.
    #[arg(long)]
    pub region: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Overrides the scenario seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides the scenario member count.
    #[arg(long)]
    pub members: Option<usize>,
    /// Print an example scenario and exit.
    #[arg(long)]
    pub example: bool,
}
