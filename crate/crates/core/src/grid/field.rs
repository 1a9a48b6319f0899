//! Regular latitude-longitude rasters.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::geo::{normalize_lon, GeoPoint};
use crate::error::{Error, Result};

const INDEX_TOL: f64 = 1e-9;

/// Geometry of a regular lat-lon grid. Row `i` sits at `lat0 + i*dlat`,
/// column `j` at `lon0 + j*dlon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lat0: f64,
    pub lon0: f64,
    pub dlat: f64,
    pub dlon: f64,
    pub nlat: usize,
    pub nlon: usize,
    #[serde(default)]
    pub wraps_lon: bool,
}

impl GridSpec {
    pub fn new(lat0: f64, lon0: f64, dlat: f64, dlon: f64, nlat: usize, nlon: usize, wraps_lon: bool) -> Result<Self> {
        let spec = Self { lat0, lon0: normalize_lon(lon0), dlat, dlon, nlat, nlon, wraps_lon };
        spec.validate()?;
        Ok(spec)
    }

    /// Global grid at `res` degrees, north-to-south rows as in ERA5
    /// (721x1440 at 0.25 degrees).
    pub fn global(res: f64) -> Result<Self> {
        let nlat = (180.0 / res).round() as usize + 1;
        let nlon = (360.0 / res).round() as usize;
        Self::new(90.0, 0.0, -res, res, nlat, nlon, true)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidGrid(m.to_string()));
        if self.nlat < 2 || self.nlon < 2 {
            return bad("need at least 2 rows and 2 columns");
        }
        if !(self.dlat.is_finite() && self.dlon.is_finite() && self.lat0.is_finite() && self.lon0.is_finite()) {
            return bad("non-finite geometry");
        }
        if self.dlat == 0.0 || self.dlon <= 0.0 {
            return bad("dlat must be nonzero and dlon positive");
        }
        if self.dlat.abs() * (self.nlat - 1) as f64 > 180.0 + 1e-9 {
            return bad("latitude span exceeds 180 degrees");
        }
        let last = self.lat0 + self.dlat * (self.nlat - 1) as f64;
        if !(-90.0 - 1e-9..=90.0 + 1e-9).contains(&self.lat0) || !(-90.0 - 1e-9..=90.0 + 1e-9).contains(&last) {
            return bad("rows fall outside [-90, 90]");
        }
        if self.wraps_lon && self.dlon * self.nlon as f64 > 360.0 + 1e-9 {
            return bad("wrapping grid spans more than 360 degrees");
        }
        if !self.wraps_lon && self.dlon * (self.nlon - 1) as f64 >= 360.0 {
            return bad("regional grid spans 360 degrees or more");
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nlat * self.nlon
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.nlon + j
    }

    #[inline]
    pub fn lat(&self, i: usize) -> f64 {
        (self.lat0 + self.dlat * i as f64).clamp(-90.0, 90.0)
    }

    #[inline]
    pub fn lon(&self, j: usize) -> f64 {
        normalize_lon(self.lon0 + self.dlon * j as f64)
    }

    pub fn point(&self, i: usize, j: usize) -> GeoPoint {
        GeoPoint { lat: self.lat(i), lon: self.lon(j) }
    }

    pub fn lat_min(&self) -> f64 {
        self.lat(0).min(self.lat(self.nlat - 1))
    }

    pub fn lat_max(&self) -> f64 {
        self.lat(0).max(self.lat(self.nlat - 1))
    }

    /// Fractional row index of `lat` (may be out of range).
    pub fn row_f(&self, lat: f64) -> f64 {
        (lat - self.lat0) / self.dlat
    }

    /// Fractional column index of `lon`, or `None` when outside a regional
    /// grid. Wrapping grids always return a value in `[0, nlon)`.
    pub fn col_f(&self, lon: f64) -> Option<f64> {
        let period = 360.0 / self.dlon;
        let mut f = (lon - self.lon0).rem_euclid(360.0) / self.dlon;
        if self.wraps_lon {
            if f >= self.nlon as f64 {
                // inside the closing gap between the last column and lon0
                if period - f < INDEX_TOL {
                    f = 0.0;
                }
            }
            return Some(f);
        }
        if f > (self.nlon - 1) as f64 + INDEX_TOL {
            if period - f < INDEX_TOL {
                return Some(0.0);
            }
            return None;
        }
        Some(f.min((self.nlon - 1) as f64))
    }

    /// Whether `p` lies within the grid's lat/lon extent.
    pub fn contains(&self, p: GeoPoint) -> bool {
        let r = self.row_f(p.lat);
        if r < -INDEX_TOL || r > (self.nlat - 1) as f64 + INDEX_TOL {
            return false;
        }
        self.col_f(p.lon).is_some()
    }

    /// Nearest grid index to `p`, if inside the domain.
    pub fn nearest(&self, p: GeoPoint) -> Option<(usize, usize)> {
        if !self.contains(p) {
            return None;
        }
        let i = self.row_f(p.lat).round().clamp(0.0, (self.nlat - 1) as f64) as usize;
        let c = self.col_f(p.lon)?;
        let mut j = c.round() as usize;
        if j >= self.nlon {
            j = if self.wraps_lon { j % self.nlon } else { self.nlon - 1 };
        }
        Some((i, j))
    }

    /// Mean latitude spacing in km.
    pub fn dlat_km(&self) -> f64 {
        self.dlat.abs().to_radians() * super::geo::EARTH_RADIUS_KM
    }

    pub fn approx_eq(&self, other: &GridSpec) -> bool {
        self.nlat == other.nlat
            && self.nlon == other.nlon
            && self.wraps_lon == other.wraps_lon
            && (self.lat0 - other.lat0).abs() < 1e-9
            && super::geo::lon_delta(self.lon0, other.lon0).abs() < 1e-9
            && (self.dlat - other.dlat).abs() < 1e-12
            && (self.dlon - other.dlon).abs() < 1e-12
    }
}

/// Physical quantity held by a [`Field`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Variable {
    /// Mean sea-level pressure, Pa.
    #[serde(rename = "MSL")]
    Msl,
    /// Temperature, K.
    T,
    /// Zonal wind, m/s.
    U,
    /// Meridional wind, m/s.
    V,
    /// Geopotential height, gpm.
    Z,
    /// Specific humidity, kg/kg.
    Q,
    /// Relative vorticity, 1/s.
    #[serde(rename = "VO")]
    Vo,
    /// Wind speed, m/s.
    #[serde(rename = "WS")]
    Ws,
    /// Land fraction, 0..1.
    #[serde(rename = "LSM")]
    Lsm,
    /// Moist turbulent energy, J/kg.
    #[serde(rename = "MTE")]
    Mte,
    /// Strike probability, percent.
    #[serde(rename = "PROB")]
    Prob,
}

impl Variable {
    pub const ALL: [Variable; 11] = [
        Variable::Msl,
        Variable::T,
        Variable::U,
        Variable::V,
        Variable::Z,
        Variable::Q,
        Variable::Vo,
        Variable::Ws,
        Variable::Lsm,
        Variable::Mte,
        Variable::Prob,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Variable::Msl => "MSL",
            Variable::T => "T",
            Variable::U => "U",
            Variable::V => "V",
            Variable::Z => "Z",
            Variable::Q => "Q",
            Variable::Vo => "VO",
            Variable::Ws => "WS",
            Variable::Lsm => "LSM",
            Variable::Mte => "MTE",
            Variable::Prob => "PROB",
        }
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Variable::ALL
            .into_iter()
            .find(|v| v.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Format(format!("unknown variable '{s}'")))
    }
}

/// Vertical level tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Level {
    /// Surface quantities: MSL and 10 m winds.
    Surface,
    /// Isobaric level in hPa.
    Hpa(u16),
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Level::Surface => f.write_str("surface"),
            Level::Hpa(p) => write!(f, "{p}"),
        }
    }
}

impl FromStr for Level {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().trim_end_matches("hPa").trim_end_matches("hpa");
        if t.eq_ignore_ascii_case("surface") || t.eq_ignore_ascii_case("sfc") {
            return Ok(Level::Surface);
        }
        t.parse::<u16>().map(Level::Hpa).map_err(|_| Error::Format(format!("unknown level '{s}'")))
    }
}

impl TryFrom<String> for Level {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Level> for String {
    fn from(l: Level) -> String {
        l.to_string()
    }
}

/// One scalar variable on a grid at one level and time. Missing points are
/// stored as NaN and flagged in `mask`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub spec: GridSpec,
    pub values: Vec<f64>,
    pub variable: Variable,
    pub level: Level,
    pub valid_time: DateTime<Utc>,
    pub mask: Option<Vec<bool>>,
}

impl Field {
    /// Builds a fully valid field; rejects wrong lengths and non-finite data.
    pub fn new(
        spec: GridSpec,
        values: Vec<f64>,
        variable: Variable,
        level: Level,
        valid_time: DateTime<Utc>,
    ) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.len() {
            return Err(Error::InvalidField(format!("expected {} values, got {}", spec.len(), values.len())));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidField(format!("non-finite value at flat index {k} without a missing mask")));
        }
        Ok(Self { spec, values, variable, level, valid_time, mask: None })
    }

    /// Builds a field whose non-finite entries become masked points.
    pub fn with_missing(
        spec: GridSpec,
        mut values: Vec<f64>,
        variable: Variable,
        level: Level,
        valid_time: DateTime<Utc>,
    ) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.len() {
            return Err(Error::InvalidField(format!("expected {} values, got {}", spec.len(), values.len())));
        }
        let mask: Vec<bool> = values.iter().map(|v| !v.is_finite()).collect();
        let any = mask.iter().any(|&m| m);
        for (v, &m) in values.iter_mut().zip(&mask) {
            if m {
                *v = f64::NAN;
            }
        }
        Ok(Self { spec, values, variable, level, valid_time, mask: any.then_some(mask) })
    }

    /// Evaluates `f(lat, lon)` at every grid point.
    pub fn from_fn(
        spec: GridSpec,
        variable: Variable,
        level: Level,
        valid_time: DateTime<Utc>,
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(spec.len());
        for i in 0..spec.nlat {
            let lat = spec.lat(i);
            for j in 0..spec.nlon {
                values.push(f(lat, spec.lon(j)));
            }
        }
        Self::new(spec, values, variable, level, valid_time)
    }

    pub fn constant(
        spec: GridSpec,
        value: f64,
        variable: Variable,
        level: Level,
        valid_time: DateTime<Utc>,
    ) -> Result<Self> {
        Self::new(spec, vec![value; spec.len()], variable, level, valid_time)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.spec.index(i, j)]
    }

    /// Value at `(i, j)` or `None` when masked.
    #[inline]
    pub fn value(&self, i: usize, j: usize) -> Option<f64> {
        let v = self.get(i, j);
        v.is_finite().then_some(v)
    }

    pub fn is_masked(&self, i: usize, j: usize) -> bool {
        self.mask.as_ref().is_some_and(|m| m[self.spec.index(i, j)])
    }

    /// Same metadata, new values (non-finite become masked).
    pub fn map_values(&self, variable: Variable, f: impl Fn(f64) -> f64) -> Result<Field> {
        let values = self.values.iter().map(|&v| f(v)).collect();
        Field::with_missing(self.spec, values, variable, self.level, self.valid_time)
    }

    /// Checks that `other` shares grid, level, and time.
    pub fn ensure_compatible(&self, other: &Field) -> Result<()> {
        if !self.spec.approx_eq(&other.spec) {
            return Err(Error::SpecMismatch(format!("{} and {} grids differ", self.variable, other.variable)));
        }
        if self.level != other.level {
            return Err(Error::SpecMismatch(format!("levels {} and {} differ", self.level, other.level)));
        }
        if self.valid_time != other.valid_time {
            return Err(Error::SpecMismatch("valid times differ".into()));
        }
        Ok(())
    }

    /// Value at an arbitrary point by bilinear interpolation, `None` outside
    /// the domain or next to masked points.
    pub fn sample(&self, p: GeoPoint) -> Option<f64> {
        if !self.spec.contains(p) {
            return None;
        }
        let r = self.spec.row_f(p.lat).clamp(0.0, (self.spec.nlat - 1) as f64);
        let c = self.spec.col_f(p.lon)?;
        super::resample::bilinear_at(self, r, c)
    }
}

/// Key of a field inside a [`FieldSet`].
pub type FieldKey = (Variable, Level);

/// All fields valid at one time for one forecast run, plus a lazily filled
/// cache of derived diagnostics (vorticity, wind speed, thickness).
pub struct FieldSet {
    pub valid_time: DateTime<Utc>,
    fields: BTreeMap<FieldKey, Field>,
    derived: Mutex<BTreeMap<(Variable, Level), Arc<Field>>>,
}

impl fmt::Debug for FieldSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FieldSet")
            .field("valid_time", &self.valid_time)
            .field("fields", &self.fields.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl Clone for FieldSet {
    fn clone(&self) -> Self {
        Self { valid_time: self.valid_time, fields: self.fields.clone(), derived: Mutex::default() }
    }
}

impl FieldSet {
    pub fn new(valid_time: DateTime<Utc>) -> Self {
        Self { valid_time, fields: BTreeMap::new(), derived: Mutex::default() }
    }

    /// Adds a field; its time must match the set's time and its grid must
    /// match fields already present.
    pub fn insert(&mut self, field: Field) -> Result<()> {
        if field.valid_time != self.valid_time {
            return Err(Error::SpecMismatch(format!(
                "{} {} valid at {} in a set valid at {}",
                field.variable, field.level, field.valid_time, self.valid_time
            )));
        }
        if let Some(first) = self.fields.values().next() {
            if !first.spec.approx_eq(&field.spec) {
                return Err(Error::SpecMismatch(format!(
                    "{} {} grid differs from the set",
                    field.variable, field.level
                )));
            }
        }
        self.fields.insert((field.variable, field.level), field);
        self.derived.lock().expect("derived cache poisoned").clear();
        Ok(())
    }

    pub fn with(mut self, field: Field) -> Result<Self> {
        self.insert(field)?;
        Ok(self)
    }

    pub fn get(&self, variable: Variable, level: Level) -> Result<&Field> {
        self.fields.get(&(variable, level)).ok_or(Error::MissingField { variable, level })
    }

    pub fn contains(&self, variable: Variable, level: Level) -> bool {
        self.fields.contains_key(&(variable, level))
    }

    pub fn keys(&self) -> impl Iterator<Item = &FieldKey> {
        self.fields.keys()
    }

    pub fn fields(&self) -> impl Iterator<Item = &Field> {
        self.fields.values()
    }

    pub fn spec(&self) -> Option<GridSpec> {
        self.fields.values().next().map(|f| f.spec)
    }

    fn cached(&self, key: (Variable, Level), make: impl FnOnce() -> Result<Field>) -> Result<Arc<Field>> {
        if let Some(f) = self.derived.lock().expect("derived cache poisoned").get(&key) {
            return Ok(Arc::clone(f));
        }
        let f = Arc::new(make()?);
        self.derived.lock().expect("derived cache poisoned").insert(key, Arc::clone(&f));
        Ok(f)
    }

    /// Relative vorticity from the U/V winds at `level`.
    pub fn vorticity(&self, level: Level) -> Result<Arc<Field>> {
        self.cached((Variable::Vo, level), || {
            super::vorticity::relative_vorticity(self.get(Variable::U, level)?, self.get(Variable::V, level)?)
        })
    }

    /// Wind speed from the U/V winds at `level`.
    pub fn wind_speed(&self, level: Level) -> Result<Arc<Field>> {
        self.cached((Variable::Ws, level), || {
            super::vorticity::wind_speed(self.get(Variable::U, level)?, self.get(Variable::V, level)?)
        })
    }

    /// Geopotential thickness between `lower` and `upper` isobaric levels.
    pub fn thickness(&self, lower: u16, upper: u16) -> Result<Arc<Field>> {
        // keyed under Z at the lower level; only one thickness layer is used
        self.cached((Variable::Z, Level::Hpa(lower)), || {
            let lo = self.get(Variable::Z, Level::Hpa(lower))?;
            let hi = self.get(Variable::Z, Level::Hpa(upper))?;
            let values = hi.values.iter().zip(&lo.values).map(|(h, l)| h - l).collect();
            Field::with_missing(lo.spec, values, Variable::Z, Level::Hpa(lower), lo.valid_time)
        })
    }
}
