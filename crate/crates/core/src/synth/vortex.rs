//! Parametric axisymmetric vortex.
//!
//! Tangential wind `V(x) = Vmax (1+b) x / (b + x^(1+b))` with `x = r/Rmax`
//! peaks at the radius of maximum wind and decays like `r^-b` outside it.
//! Its vorticity is largest at the center (finite, `2 Vmax (1+b) / (b Rmax)`)
//! and falls off monotonically for `b <= 1`. The pressure deficit
//! `dP / (1 + x^2)^b` has the matching far-field decay; `b = 1` is exactly
//! cyclostrophic up to the amplitude. No Coriolis term: the fields are
//! tracker fixtures, not physical states.

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{azimuth_deg, haversine_km, Field, FieldSet, GeoPoint, GridSpec, Level, Variable};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VortexSpec {
    pub center: GeoPoint,
    /// Pa.
    pub central_pressure: f64,
    /// Pa.
    pub ambient_pressure: f64,
    pub radius_max_wind_km: f64,
    /// m/s.
    pub peak_wind: f64,
    /// Outer decay exponent.
    pub shape_b: f64,
}

/// Background state shared by every synthetic field set.
pub const BASE_Z850: f64 = 1500.0;
pub const BASE_Z500: f64 = 5850.0;
pub const BASE_Z200: f64 = 12400.0;
pub const BASE_T850: f64 = 288.0;
pub const BASE_Q850: f64 = 0.012;

impl VortexSpec {
    /// 960 hPa core in a 1010 hPa environment, 50 km RMW, 40 m/s.
    pub fn standard(center: GeoPoint) -> Self {
        Self {
            center,
            central_pressure: 96000.0,
            ambient_pressure: 101000.0,
            radius_max_wind_km: 50.0,
            peak_wind: 40.0,
            shape_b: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.central_pressure <= self.ambient_pressure) {
            return Err(Error::Config("central pressure must not exceed ambient pressure".into()));
        }
        if !(self.radius_max_wind_km > 0.0) || !(self.peak_wind >= 0.0) || !(self.shape_b > 0.0) {
            return Err(Error::Config("vortex radius, peak wind, and shape must be positive".into()));
        }
        Ok(())
    }

    pub fn deficit(&self) -> f64 {
        self.ambient_pressure - self.central_pressure
    }

    /// Wind amplitude; a vortex without a pressure deficit has no winds.
    fn amplitude(&self) -> f64 {
        if self.deficit() > 0.0 {
            self.peak_wind
        } else {
            0.0
        }
    }

    pub fn pressure_at(&self, r_km: f64) -> f64 {
        let x = r_km / self.radius_max_wind_km;
        self.ambient_pressure - self.deficit() / (1.0 + x * x).powf(self.shape_b)
    }

    /// Tangential wind speed, m/s.
    pub fn wind_at(&self, r_km: f64) -> f64 {
        let b = self.shape_b;
        let x = r_km / self.radius_max_wind_km;
        self.amplitude() * (1.0 + b) * x / (b + x.powf(1.0 + b))
    }

    /// Analytic relative vorticity `(1/r) d(rV)/dr` (1/s), positive for the
    /// cyclonic sense.
    pub fn vorticity_at(&self, r_km: f64) -> f64 {
        let b = self.shape_b;
        let l = self.radius_max_wind_km * 1000.0;
        let y = (r_km / self.radius_max_wind_km).powf(1.0 + b);
        self.amplitude() * (1.0 + b) / l * (2.0 * b + (1.0 - b) * y) / (b + y).powi(2)
    }

    pub fn core_vorticity(&self) -> f64 {
        self.vorticity_at(0.0)
    }

    /// Peak wind that yields the requested core vorticity.
    pub fn peak_wind_for_core_vorticity(core: f64, radius_max_wind_km: f64, shape_b: f64) -> f64 {
        core * shape_b * radius_max_wind_km * 1000.0 / (2.0 * (1.0 + shape_b))
    }
}

/// Uniform environmental wind, m/s.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Steering {
    pub u: f64,
    pub v: f64,
}

/// Polar coordinates (distance km, azimuth degrees) of every grid point
/// relative to `center`.
fn polar(spec: &GridSpec, center: GeoPoint) -> (Vec<f64>, Vec<f64>) {
    let mut r = vec![0.0; spec.len()];
    let mut az = vec![0.0; spec.len()];
    par::for_each_row(&mut r, spec.nlon, |i, row| {
        for (j, d) in row.iter_mut().enumerate() {
            *d = haversine_km(center, spec.point(i, j));
        }
    });
    par::for_each_row(&mut az, spec.nlon, |i, row| {
        for (j, a) in row.iter_mut().enumerate() {
            *a = azimuth_deg(center, spec.point(i, j)).unwrap_or(0.0);
        }
    });
    (r, az)
}

/// Field set for one vortex over a uniform steering flow: MSL, surface,
/// 850 and 500 hPa winds (half-strength vortex at 500 hPa), 850/500/200 hPa
/// heights with a warm-core thickness maximum, and 850 hPa T and q with
/// warm moist core anomalies.
pub fn gen_vortex_field(
    v: &VortexSpec,
    spec: &GridSpec,
    valid_time: DateTime<Utc>,
    steering: Steering,
) -> Result<FieldSet> {
    gen_vortex_field_opt(Some(v), v.ambient_pressure, spec, valid_time, steering)
}

/// Like [`gen_vortex_field`] with the vortex removed (`None`): flat pressure
/// at `ambient` and the steering flow only.
pub fn gen_vortex_field_opt(
    v: Option<&VortexSpec>,
    ambient: f64,
    spec: &GridSpec,
    valid_time: DateTime<Utc>,
    steering: Steering,
) -> Result<FieldSet> {
    spec.validate()?;
    let n = spec.len();
    let (mut deficit, mut vt_u, mut vt_v) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    if let Some(v) = v {
        v.validate()?;
        if !spec.contains(v.center) {
            return Err(Error::VortexOutsideDomain { lat: v.center.lat, lon: v.center.lon });
        }
        let sense = if v.center.lat < 0.0 { -1.0 } else { 1.0 };
        let (r, az) = polar(spec, v.center);
        for k in 0..n {
            deficit[k] = v.ambient_pressure - v.pressure_at(r[k]);
            let w = v.wind_at(r[k]);
            let a = az[k].to_radians();
            // counter-clockwise tangent (-cos az, sin az) in (east, north)
            vt_u[k] = -sense * w * a.cos();
            vt_v[k] = sense * w * a.sin();
        }
    }
    let ambient = v.map_or(ambient, |v| v.ambient_pressure);

    let mk = |var: Variable, level: Level, f: &dyn Fn(usize) -> f64| -> Result<Field> {
        Field::new(*spec, (0..n).map(f).collect(), var, level, valid_time)
    };
    let mut fs = FieldSet::new(valid_time);
    fs.insert(mk(Variable::Msl, Level::Surface, &|k| ambient - deficit[k])?)?;
    for (level, scale) in [(Level::Surface, 1.0), (Level::Hpa(850), 1.0), (Level::Hpa(500), 0.5)] {
        fs.insert(mk(Variable::U, level, &|k| steering.u + scale * vt_u[k])?)?;
        fs.insert(mk(Variable::V, level, &|k| steering.v + scale * vt_v[k])?)?;
    }
    // heights in gpm; ~8 m per hPa of surface deficit at 850 hPa, with the
    // upper-level anomaly of opposite sign (warm core)
    fs.insert(mk(Variable::Z, Level::Hpa(850), &|k| BASE_Z850 - 0.08 * deficit[k])?)?;
    fs.insert(mk(Variable::Z, Level::Hpa(500), &|k| BASE_Z500 - 0.02 * deficit[k])?)?;
    fs.insert(mk(Variable::Z, Level::Hpa(200), &|k| BASE_Z200 + 0.04 * deficit[k])?)?;
    fs.insert(mk(Variable::T, Level::Hpa(850), &|k| BASE_T850 + 6e-4 * deficit[k])?)?;
    fs.insert(mk(Variable::Q, Level::Hpa(850), &|k| BASE_Q850 + 1.6e-6 * deficit[k])?)?;
    Ok(fs)
}
