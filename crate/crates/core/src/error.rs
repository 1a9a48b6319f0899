use crate::grid::{Level, Variable};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid field: {0}")]
    InvalidField(String),
    #[error("points coincide; bearing is undefined")]
    CoincidentPoints,
    #[error("points are antipodal; bearing is undefined")]
    AntipodalPoints,
    #[error("grid specs or field metadata do not match: {0}")]
    SpecMismatch(String),
    #[error("downsampling factor {factor} incompatible with a {nlat}x{nlon} grid")]
    IncompatibleFactor { factor: usize, nlat: usize, nlon: usize },
    #[error("target grid is not covered by the source domain")]
    DomainMismatch,
    #[error("no grid points within {radius_km} km of ({lat}, {lon})")]
    EmptyNeighborhood { lat: f64, lon: f64, radius_km: f64 },
    #[error("missing field {variable} at {level}")]
    MissingField { variable: Variable, level: Level },
    #[error("steering winds unavailable at {0} hPa")]
    MissingSteeringFields(u16),
    #[error("seed position ({lat}, {lon}) lies outside the forecast domain")]
    SeedOutsideDomain { lat: f64, lon: f64 },
    #[error("time axis misaligned: {0}")]
    TimeMisalignment(String),
    #[error("member {member}: {source}")]
    Member {
        member: u32,
        #[source]
        source: Box<Error>,
    },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("consecutive observed positions coincide")]
    CoincidentObservations,
    #[error("insufficient sample: need at least {needed}, got {got}")]
    InsufficientSample { needed: usize, got: usize },
    #[error("outcomes contain only one class; ROC is undefined")]
    DegenerateOutcomes,
    #[error("value {0} out of range")]
    OutOfRange(f64),
    #[error("need at least {needed} ensemble members, got {got}")]
    TooFewMembers { needed: usize, got: usize },
    #[error("missing perturbation variable {0}")]
    MissingVariable(Variable),
    #[error("vortex center ({lat}, {lon}) is outside the grid")]
    VortexOutsideDomain { lat: f64, lon: f64 },
    #[error("synthetic track leaves the grid at step {step}")]
    TrackExitsDomain { step: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
