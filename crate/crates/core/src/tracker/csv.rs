//! Track CSV reading and writing.
//!
//! Columns: `storm_id,member_id,valid_time,lat,lon,min_msl_pa,max_ws10m_ms,phase`.

use std::io::{Read, Write};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::track::{MemberId, Phase, Track, TrackPoint};
use crate::error::{Error, Result};
use crate::grid::GeoPoint;

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    storm_id: String,
    member_id: String,
    valid_time: String,
    lat: f64,
    lon: f64,
    min_msl_pa: f64,
    max_ws10m_ms: f64,
    phase: String,
}

pub fn write_tracks<W: Write>(w: W, tracks: &[&Track]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for t in tracks {
        for p in &t.points {
            out.serialize(Row {
                storm_id: t.storm_id.clone(),
                member_id: t.member.to_string(),
                valid_time: p.valid_time.to_rfc3339_opts(SecondsFormat::Secs, true),
                lat: p.center.lat,
                lon: p.center.lon,
                min_msl_pa: p.min_msl,
                max_ws10m_ms: p.max_ws10m,
                phase: p.phase.to_string(),
            })?;
        }
    }
    if tracks.iter().all(|t| t.points.is_empty()) {
        out.write_record(["storm_id", "member_id", "valid_time", "lat", "lon", "min_msl_pa", "max_ws10m_ms", "phase"])?;
    }
    out.flush()?;
    Ok(())
}

pub fn tracks_to_string(tracks: &[&Track]) -> Result<String> {
    let mut buf = Vec::new();
    write_tracks(&mut buf, tracks)?;
    String::from_utf8(buf).map_err(|e| Error::Format(e.to_string()))
}

/// Reads tracks, grouping rows by (storm_id, member_id) in order of first
/// appearance; points are sorted by time. Point-level invariants are
/// checked.
pub fn read_tracks<R: Read>(r: R) -> Result<Vec<Track>> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut tracks: Vec<Track> = Vec::new();
    for (line, row) in rdr.deserialize::<Row>().enumerate() {
        let row = row?;
        let member: MemberId = row.member_id.parse()?;
        let valid_time: DateTime<Utc> = DateTime::parse_from_rfc3339(row.valid_time.trim())
            .map_err(|e| Error::Format(format!("row {}: bad valid_time '{}': {e}", line + 2, row.valid_time)))?
            .with_timezone(&Utc);
        let point = TrackPoint {
            valid_time,
            center: GeoPoint::try_new(row.lat, row.lon)?,
            min_msl: row.min_msl_pa,
            max_ws10m: row.max_ws10m_ms,
            phase: row.phase.parse::<Phase>()?,
        };
        point.validate().map_err(|e| Error::Format(format!("row {}: {e}", line + 2)))?;
        match tracks.iter_mut().find(|t| t.storm_id == row.storm_id && t.member == member) {
            Some(t) => t.points.push(point),
            None => tracks.push(Track { storm_id: row.storm_id, member, points: vec![point] }),
        }
    }
    for t in &mut tracks {
        t.points.sort_by_key(|p| p.valid_time);
        if t.points.windows(2).any(|w| w[0].valid_time == w[1].valid_time) {
            return Err(Error::Format(format!("{} {}: duplicate valid_time", t.storm_id, t.member)));
        }
    }
    Ok(tracks)
}
