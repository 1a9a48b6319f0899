//! Ensemble strike probability maps.

use chrono::{DateTime, Utc};

use crate::error::{Error, Result};
use crate::grid::geo::{arc_km, point_segment_distance_unit};
use crate::grid::{Field, GridSpec, Level, Variable};
use crate::par;
use crate::tracker::{EnsembleTrackSet, Track};

/// Default impact radius: one degree of latitude, about 111 km.
pub const DEFAULT_IMPACT_RADIUS_KM: f64 = 111.0;

#[derive(Debug, Clone, PartialEq)]
pub struct StrikeProbabilityField {
    pub spec: GridSpec,
    /// Percent, row-major.
    pub prob: Vec<f64>,
    pub impact_radius_km: f64,
    pub storm_ids: Vec<String>,
}

impl StrikeProbabilityField {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.prob[self.spec.index(i, j)]
    }

    pub fn to_field(&self, valid_time: DateTime<Utc>) -> Result<Field> {
        Field::new(self.spec, self.prob.clone(), Variable::Prob, Level::Surface, valid_time)
    }
}

/// Great-circle segments of one track as unit vectors with their lengths.
struct Polyline {
    segments: Vec<([f64; 3], [f64; 3], f64)>,
}

impl Polyline {
    fn new(t: &Track) -> Self {
        let v: Vec<[f64; 3]> = t.points.iter().map(|p| p.center.to_unit()).collect();
        let segments = match v.len() {
            0 => Vec::new(),
            1 => vec![(v[0], v[0], 0.0)],
            _ => v.windows(2).map(|w| (w[0], w[1], arc_km(w[0], w[1]))).collect(),
        };
        Self { segments }
    }

    fn within(&self, p: [f64; 3], radius_km: f64) -> bool {
        self.segments.iter().any(|&(a, b, len)| {
            // every point of the segment is within `len` of `a`
            arc_km(p, a) - len <= radius_km && point_segment_distance_unit(p, a, b) <= radius_km
        })
    }
}

/// Percentage of members whose track passes within `radius_km` of each grid
/// point, using point-to-segment distance along the track polyline.
pub fn strike_probability(
    tracks: &EnsembleTrackSet,
    spec: &GridSpec,
    radius_km: f64,
) -> Result<StrikeProbabilityField> {
    spec.validate()?;
    let m = tracks.members.len();
    if m == 0 {
        return Err(Error::EmptyInput("ensemble has no members"));
    }
    let lines: Vec<Polyline> = tracks.members.iter().map(Polyline::new).collect();
    let mut prob = vec![0.0; spec.len()];
    par::for_each_row(&mut prob, spec.nlon, |i, row| {
        for (j, out) in row.iter_mut().enumerate() {
            let p = spec.point(i, j).to_unit();
            let k = lines.iter().filter(|l| l.within(p, radius_km)).count();
            *out = 100.0 * k as f64 / m as f64;
        }
    });
    Ok(StrikeProbabilityField {
        spec: *spec,
        prob,
        impact_radius_km: radius_km,
        storm_ids: vec![tracks.storm_id.clone()],
    })
}

/// Pointwise maximum over storms.
pub fn merge_strike(fields: &[StrikeProbabilityField]) -> Result<StrikeProbabilityField> {
    let first = fields.first().ok_or(Error::EmptyInput("no strike fields to merge"))?;
    let mut out = first.clone();
    for f in &fields[1..] {
        if !f.spec.approx_eq(&out.spec) {
            return Err(Error::SpecMismatch("strike fields are on different grids".into()));
        }
        for (o, v) in out.prob.iter_mut().zip(&f.prob) {
            *o = o.max(*v);
        }
        for id in &f.storm_ids {
            if !out.storm_ids.contains(id) {
                out.storm_ids.push(id.clone());
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{destination, haversine_km, GeoPoint};
    use crate::tracker::{MemberId, Phase, TrackPoint};
    use chrono::{Duration, TimeZone};

    fn track(m: u32, pts: &[GeoPoint]) -> Track {
        let t0 = Utc.with_ymd_and_hms(2018, 9, 1, 0, 0, 0).unwrap();
        Track {
            storm_id: "S".into(),
            member: MemberId::Member(m),
            points: pts
                .iter()
                .enumerate()
                .map(|(k, c)| TrackPoint {
                    valid_time: t0 + Duration::hours(6 * k as i64),
                    center: *c,
                    min_msl: 98000.0,
                    max_ws10m: 30.0,
                    phase: Phase::Tropical,
                })
                .collect(),
        }
    }

    fn set(tracks: Vec<Track>) -> EnsembleTrackSet {
        let t0 = tracks[0].points[0].valid_time;
        EnsembleTrackSet::from_members("S", t0, tracks).unwrap()
    }

    #[test]
    fn single_member_on_track() {
        let g = GridSpec::new(10.0, 120.0, 0.5, 0.5, 21, 41, false).unwrap();
        let s = set(vec![track(0, &[GeoPoint::new(15.0, 125.0), GeoPoint::new(15.0, 135.0)])]);
        let f = strike_probability(&s, &g, DEFAULT_IMPACT_RADIUS_KM).unwrap();
        // (15, 130) is a grid point on the segment but 5 degrees from both vertices
        assert_eq!(f.get(10, 20), 100.0);
        // 4 degrees north of the track
        assert_eq!(f.get(18, 20), 0.0);
        assert!(f.prob.iter().all(|&p| p == 0.0 || p == 100.0));
    }

    #[test]
    fn matches_brute_force_over_vertices_and_segments() {
        let g = GridSpec::new(10.0, 120.0, 0.5, 0.5, 21, 41, false).unwrap();
        let start = GeoPoint::new(14.0, 124.0);
        let members: Vec<Track> = (0..8)
            .map(|m| {
                let pts: Vec<GeoPoint> =
                    (0..6).map(|k| destination(start, 60.0 + 5.0 * m as f64, 150.0 * k as f64)).collect();
                track(m, &pts)
            })
            .collect();
        let s = set(members.clone());
        let f = strike_probability(&s, &g, 111.0).unwrap();
        for i in 0..g.nlat {
            for j in 0..g.nlon {
                let p = g.point(i, j);
                let k = members
                    .iter()
                    .filter(|t| {
                        t.points
                            .windows(2)
                            .any(|w| crate::grid::point_segment_distance_km(p, w[0].center, w[1].center) <= 111.0)
                    })
                    .count();
                assert_eq!(f.get(i, j), 100.0 * k as f64 / 8.0);
            }
        }
        // far away
        assert!(haversine_km(g.point(20, 0), start) > 500.0);
    }

    #[test]
    fn merge_is_pointwise_max() {
        let g = GridSpec::new(10.0, 120.0, 1.0, 1.0, 3, 3, false).unwrap();
        let mk = |v: f64, id: &str| StrikeProbabilityField {
            spec: g,
            prob: vec![v; 9],
            impact_radius_km: 111.0,
            storm_ids: vec![id.into()],
        };
        let one = mk(30.0, "A");
        assert_eq!(merge_strike(std::slice::from_ref(&one)).unwrap(), one);
        let m = merge_strike(&[one, mk(70.0, "B")]).unwrap();
        assert!(m.prob.iter().all(|&p| p == 70.0));
        assert_eq!(m.storm_ids, vec!["A".to_string(), "B".to_string()]);

        let other = GridSpec::new(11.0, 120.0, 1.0, 1.0, 3, 3, false).unwrap();
        let bad = StrikeProbabilityField { spec: other, ..mk(1.0, "C") };
        assert!(matches!(merge_strike(&[mk(1.0, "A"), bad]), Err(Error::SpecMismatch(_))));
    }
}
