//! Track data model and ensemble-mean construction.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{spherical_centroid, GeoPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    #[default]
    Tropical,
    Extratropical,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Tropical => "tropical",
            Phase::Extratropical => "extratropical",
        })
    }
}

impl FromStr for Phase {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tropical" | "tc" | "" => Ok(Phase::Tropical),
            "extratropical" | "et" => Ok(Phase::Extratropical),
            other => Err(Error::Format(format!("unknown phase '{other}'"))),
        }
    }
}

/// Who produced a track: an ensemble member, the ensemble mean, or the
/// observed best track.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MemberId {
    Member(u32),
    Mean,
    Obs,
}

impl fmt::Display for MemberId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MemberId::Member(m) => write!(f, "{m}"),
            MemberId::Mean => f.write_str("MEAN"),
            MemberId::Obs => f.write_str("OBS"),
        }
    }
}

impl FromStr for MemberId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "MEAN" => Ok(MemberId::Mean),
            "OBS" => Ok(MemberId::Obs),
            n => n.parse().map(MemberId::Member).map_err(|_| Error::Format(format!("bad member_id '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub valid_time: DateTime<Utc>,
    pub center: GeoPoint,
    /// Minimum MSL pressure near the center, Pa.
    pub min_msl: f64,
    /// Maximum 10 m wind speed near the center, m/s.
    pub max_ws10m: f64,
    pub phase: Phase,
}

impl TrackPoint {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_msl > 85000.0 && self.min_msl < 108000.0) {
            return Err(Error::Format(format!("min_msl {} Pa outside (85000, 108000)", self.min_msl)));
        }
        if !(self.max_ws10m >= 0.0) {
            return Err(Error::Format(format!("negative max_ws10m {}", self.max_ws10m)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Track {
    pub storm_id: String,
    pub member: MemberId,
    pub points: Vec<TrackPoint>,
}

impl Track {
    pub fn new(storm_id: impl Into<String>, member: MemberId) -> Self {
        Self { storm_id: storm_id.into(), member, points: Vec::new() }
    }

    pub fn at(&self, t: DateTime<Utc>) -> Option<&TrackPoint> {
        self.points.binary_search_by(|p| p.valid_time.cmp(&t)).ok().map(|k| &self.points[k])
    }

    pub fn first_time(&self) -> Option<DateTime<Utc>> {
        self.points.first().map(|p| p.valid_time)
    }

    pub fn last_time(&self) -> Option<DateTime<Utc>> {
        self.points.last().map(|p| p.valid_time)
    }

    /// Checks strictly increasing times separated by exactly `step`.
    pub fn validate(&self, step: Duration) -> Result<()> {
        for w in self.points.windows(2) {
            if w[1].valid_time - w[0].valid_time != step {
                return Err(Error::TimeMisalignment(format!(
                    "{} {}: gap between {} and {} is not {} h",
                    self.storm_id,
                    self.member,
                    w[0].valid_time.to_rfc3339(),
                    w[1].valid_time.to_rfc3339(),
                    step.num_hours()
                )));
            }
        }
        for p in &self.points {
            p.validate()?;
        }
        Ok(())
    }
}

/// Phase flag per time, taken from the most recent entry at or before the
/// query time. Defaults to tropical.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhaseSchedule {
    entries: Vec<(DateTime<Utc>, Phase)>,
}

impl PhaseSchedule {
    pub fn new(mut entries: Vec<(DateTime<Utc>, Phase)>) -> Self {
        entries.sort_by_key(|e| e.0);
        Self { entries }
    }

    pub fn from_track(track: &Track) -> Self {
        Self::new(track.points.iter().map(|p| (p.valid_time, p.phase)).collect())
    }

    pub fn at(&self, t: DateTime<Utc>) -> Phase {
        match self.entries.partition_point(|e| e.0 <= t) {
            0 => self.entries.first().map(|e| e.1).unwrap_or_default(),
            k => self.entries[k - 1].1,
        }
    }
}

/// All member tracks of one storm from one initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleTrackSet {
    pub storm_id: String,
    pub init_time: DateTime<Utc>,
    pub members: Vec<Track>,
    pub mean_track: Track,
}

impl EnsembleTrackSet {
    pub fn from_members(storm_id: impl Into<String>, init_time: DateTime<Utc>, members: Vec<Track>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyInput("ensemble has no members"));
        }
        let storm_id = storm_id.into();
        let mean_track = ensemble_mean(&storm_id, &members);
        Ok(Self { storm_id, init_time, members, mean_track })
    }

    /// Positions of members still alive at `t`.
    pub fn positions_at(&self, t: DateTime<Utc>) -> Vec<GeoPoint> {
        self.members.iter().filter_map(|m| m.at(t)).map(|p| p.center).collect()
    }
}

/// Ensemble-mean track: at each time, the spherical centroid of the members
/// alive then. Intensities are member means; phase follows the first live
/// member.
pub fn ensemble_mean(storm_id: &str, members: &[Track]) -> Track {
    let times: BTreeSet<DateTime<Utc>> = members.iter().flat_map(|m| m.points.iter().map(|p| p.valid_time)).collect();
    let mut mean = Track::new(storm_id, MemberId::Mean);
    for t in times {
        let alive: Vec<&TrackPoint> = members.iter().filter_map(|m| m.at(t)).collect();
        let centers: Vec<GeoPoint> = alive.iter().map(|p| p.center).collect();
        let Some(center) = spherical_centroid(&centers) else { continue };
        let n = alive.len() as f64;
        mean.points.push(TrackPoint {
            valid_time: t,
            center,
            min_msl: alive.iter().map(|p| p.min_msl).sum::<f64>() / n,
            max_ws10m: alive.iter().map(|p| p.max_ws10m).sum::<f64>() / n,
            phase: alive[0].phase,
        });
    }
    mean
}
