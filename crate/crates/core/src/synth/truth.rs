//! A vortex translated along a great circle.

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use super::vortex::{gen_vortex_field, gen_vortex_field_opt, Steering, VortexSpec};
use crate::error::{Error, Result};
use crate::grid::{azimuth_deg, destination, FieldSet, GeoPoint, GridSpec};
use crate::tracker::{MemberId, Phase, Track, TrackPoint};

/// Constant translation: initial great-circle bearing and speed.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Motion {
    pub bearing_deg: f64,
    /// m/s.
    pub speed_ms: f64,
}

impl Motion {
    /// Environmental wind equal to a motion of `speed_ms` along `heading_deg`.
    pub fn steering(heading_deg: f64, speed_ms: f64) -> Steering {
        let h = heading_deg.to_radians();
        Steering { u: speed_ms * h.sin(), v: speed_ms * h.cos() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthScenario {
    pub vortex: VortexSpec,
    pub motion: Motion,
    /// Number of steps after the initial time.
    pub steps: usize,
    pub step_hours: i64,
    /// Last step carrying the vortex; later fields are flat.
    pub dissipate_after: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct TruthRun {
    /// One field set per time, `steps + 1` in all.
    pub fields: Vec<FieldSet>,
    /// Positions while the vortex exists.
    pub track: Track,
}

impl TruthScenario {
    pub fn position(&self, k: usize) -> GeoPoint {
        let dist = self.motion.speed_ms * (k as i64 * self.step_hours * 3600) as f64 / 1000.0;
        destination(self.vortex.center, self.motion.bearing_deg, dist)
    }

    /// Local heading of the great circle at step `k`.
    pub fn heading(&self, k: usize) -> f64 {
        let here = self.position(k);
        let d = self.motion.speed_ms * (k as i64 * self.step_hours * 3600) as f64 / 1000.0;
        let ahead = destination(self.vortex.center, self.motion.bearing_deg, d + 1.0);
        azimuth_deg(here, ahead).unwrap_or(self.motion.bearing_deg)
    }

    pub fn last_active_step(&self) -> usize {
        self.dissipate_after.map_or(self.steps, |k| k.min(self.steps))
    }

    pub fn steering(&self, k: usize) -> Steering {
        Motion::steering(self.heading(k), self.motion.speed_ms)
    }
}

/// Fields and truth track of a vortex moving at constant speed, with the
/// environmental wind at every level equal to the motion vector.
pub fn advect_truth(s: &TruthScenario, spec: &GridSpec, init_time: DateTime<Utc>, storm_id: &str) -> Result<TruthRun> {
    s.vortex.validate()?;
    let last = s.last_active_step();
    for k in 0..=last {
        if !spec.contains(s.position(k)) {
            return Err(Error::TrackExitsDomain { step: k });
        }
    }
    let mut fields = Vec::with_capacity(s.steps + 1);
    let mut track = Track::new(storm_id, MemberId::Obs);
    for k in 0..=s.steps {
        let t = init_time + Duration::hours(k as i64 * s.step_hours);
        let steer = s.steering(k);
        if k <= last {
            let v = VortexSpec { center: s.position(k), ..s.vortex };
            fields.push(gen_vortex_field(&v, spec, t, steer)?);
            track.points.push(TrackPoint {
                valid_time: t,
                center: v.center,
                min_msl: v.central_pressure,
                max_ws10m: v.peak_wind + s.motion.speed_ms,
                phase: Phase::Tropical,
            });
        } else {
            fields.push(gen_vortex_field_opt(None, s.vortex.ambient_pressure, spec, t, steer)?);
        }
    }
    Ok(TruthRun { fields, track })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{haversine_km, Level, Variable};
    use chrono::TimeZone;

    fn t0() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2018, 9, 1, 0, 0, 0).unwrap()
    }

    fn scenario(speed: f64, bearing: f64, steps: usize) -> TruthScenario {
        TruthScenario {
            vortex: VortexSpec::standard(GeoPoint::new(20.0, 150.0)),
            motion: Motion { bearing_deg: bearing, speed_ms: speed },
            steps,
            step_hours: 6,
            dissipate_after: None,
        }
    }

    #[test]
    fn stationary() {
        let g = GridSpec::new(15.0, 145.0, 0.5, 0.5, 21, 21, false).unwrap();
        let r = advect_truth(&scenario(0.0, 270.0, 3), &g, t0(), "S").unwrap();
        assert_eq!(r.fields.len(), 4);
        assert!(r.track.points.iter().all(|p| p.center == r.track.points[0].center));
    }

    #[test]
    fn westward_displacement() {
        let s = scenario(5.0, 270.0, 20);
        let total = haversine_km(s.position(0), s.position(20));
        assert!((total - 2160.0).abs() < 1.0);
        // steps are equal along the path
        for k in 0..20 {
            assert!((haversine_km(s.position(k), s.position(k + 1)) - 108.0).abs() < 1e-6);
        }
    }

    #[test]
    fn dissipation_flattens_fields() {
        let g = GridSpec::new(15.0, 140.0, 0.5, 0.5, 21, 31, false).unwrap();
        let mut s = scenario(5.0, 270.0, 6);
        s.dissipate_after = Some(3);
        let r = advect_truth(&s, &g, t0(), "S").unwrap();
        assert_eq!(r.track.points.len(), 4);
        assert_eq!(r.fields.len(), 7);
        for fs in &r.fields[4..] {
            let msl = fs.get(Variable::Msl, Level::Surface).unwrap();
            assert!(msl.values.iter().all(|&p| p == s.vortex.ambient_pressure));
        }
    }

    #[test]
    fn exits_domain() {
        let g = GridSpec::new(15.0, 145.0, 0.5, 0.5, 21, 21, false).unwrap();
        assert!(matches!(advect_truth(&scenario(10.0, 90.0, 20), &g, t0(), "S"), Err(Error::TrackExitsDomain { .. })));
    }
}
