//! Position error and spread of ensemble track forecasts.

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};

use super::along_cross::along_cross;
use crate::error::{Error, Result};
use crate::grid::{haversine_km, GeoPoint};
use crate::tracker::{EnsembleTrackSet, Track};

/// RMS great-circle distance between paired (ensemble mean, observed)
/// positions at one lead time.
pub fn error_tc(cases: &[(GeoPoint, GeoPoint)]) -> Result<f64> {
    if cases.is_empty() {
        return Err(Error::EmptyInput("no cases for the ensemble mean error"));
    }
    let ss: f64 = cases.iter().map(|(m, o)| haversine_km(*m, *o).powi(2)).sum();
    Ok((ss / cases.len() as f64).sqrt())
}

/// One case for [`spread_tc`]: the ensemble mean position and the positions
/// of the members alive at the lead time.
#[derive(Debug, Clone, PartialEq)]
pub struct SpreadCase {
    pub mean: GeoPoint,
    pub members: Vec<GeoPoint>,
}

impl SpreadCase {
    /// Case at time `t`, or `None` when no member (or no mean) exists then.
    pub fn from_set(set: &EnsembleTrackSet, t: DateTime<Utc>) -> Option<Self> {
        let mean = set.mean_track.at(t)?.center;
        let members = set.positions_at(t);
        (!members.is_empty()).then_some(Self { mean, members })
    }

    /// Mean squared member distance from the ensemble mean, km².
    pub fn mean_square(&self) -> f64 {
        let ss: f64 = self.members.iter().map(|p| haversine_km(*p, self.mean).powi(2)).sum();
        ss / self.members.len() as f64
    }
}

/// RMS distance of members from their ensemble mean, averaged over members
/// within each case and then over cases.
pub fn spread_tc(cases: &[SpreadCase]) -> Result<f64> {
    if cases.is_empty() {
        return Err(Error::EmptyInput("no cases for the ensemble spread"));
    }
    if cases.iter().any(|c| c.members.is_empty()) {
        return Err(Error::EmptyInput("spread case without members"));
    }
    let s: f64 = cases.iter().map(SpreadCase::mean_square).sum();
    Ok((s / cases.len() as f64).sqrt())
}

/// Sum of a per-lead metric over the accumulation window.
pub fn acc_error(per_lead: &[f64]) -> Result<f64> {
    if per_lead.is_empty() {
        return Err(Error::EmptyInput("empty lead-time window"));
    }
    Ok(per_lead.iter().sum())
}

pub fn acc_spread(per_lead: &[f64]) -> Result<f64> {
    acc_error(per_lead)
}

/// Default accumulation window: 6 h steps through 120 h.
pub fn default_leads() -> Vec<i64> {
    (1..=20).map(|k| 6 * k).collect()
}

/// Per-case verification quantities at one lead time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackErrorSample {
    pub storm_id: String,
    pub init_time: DateTime<Utc>,
    pub lead_h: i64,
    /// Distance of the ensemble mean from the observation.
    pub error_km: f64,
    /// RMS member distance from the ensemble mean.
    pub spread_km: f64,
    pub n_members: usize,
    /// Along-track error of the ensemble mean; absent when the observed
    /// track has no neighboring point to define its direction.
    pub at_km: Option<f64>,
    pub ct_km: Option<f64>,
    pub dpe_km: f64,
}

/// Samples for every requested lead at which both the observed track and at
/// least one member exist.
pub fn track_error_samples(set: &EnsembleTrackSet, obs: &Track, leads_h: &[i64]) -> Result<Vec<TrackErrorSample>> {
    let mut out = Vec::new();
    for &lead in leads_h {
        let t = set.init_time + Duration::hours(lead);
        let Some(ob2) = obs.at(t) else { continue };
        let Some(case) = SpreadCase::from_set(set, t) else { continue };
        let fc = case.mean;
        let dpe = haversine_km(ob2.center, fc);
        // observed motion into t, or out of t when t starts the record
        let before = obs.points.iter().rev().find(|p| p.valid_time < t);
        let after = obs.points.iter().find(|p| p.valid_time > t);
        let ac = match (before, after) {
            (Some(ob1), _) => Some(along_cross(ob1.center, ob2.center, fc)?),
            (None, Some(ob3)) => {
                // reflect the next observation through ob2 to get a virtual
                // previous point with the same heading
                let virt = crate::grid::destination(
                    ob2.center,
                    crate::grid::azimuth_deg(ob3.center, ob2.center)?,
                    haversine_km(ob2.center, ob3.center),
                );
                Some(along_cross(virt, ob2.center, fc)?)
            }
            (None, None) => None,
        };
        out.push(TrackErrorSample {
            storm_id: set.storm_id.clone(),
            init_time: set.init_time,
            lead_h: lead,
            error_km: dpe,
            spread_km: case.mean_square().sqrt(),
            n_members: case.members.len(),
            at_km: ac.map(|a| a.at_km),
            ct_km: ac.map(|a| a.ct_km),
            dpe_km: dpe,
        });
    }
    Ok(out)
}

/// Five-number summary plus mean.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Some(Self {
            n: v.len(),
            mean: v.iter().sum::<f64>() / v.len() as f64,
            min: v[0],
            q25: quantile_sorted(&v, 0.25),
            median: quantile_sorted(&v, 0.5),
            q75: quantile_sorted(&v, 0.75),
            max: v[v.len() - 1],
        })
    }
}

/// Linear-interpolation quantile of sorted data (`(n-1) q` position).
pub fn quantile_sorted(v: &[f64], q: f64) -> f64 {
    let h = (v.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

/// Pooled metrics at one lead time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeadSummary {
    pub lead_h: i64,
    pub error_km: f64,
    pub spread_km: f64,
    pub n_cases: usize,
    pub at_stats: Option<Summary>,
    pub ct_stats: Option<Summary>,
}

/// Pools samples by lead time. Cases are (storm, init) pairs, each counted
/// once per lead.
pub fn summarize_leads(samples: &[TrackErrorSample], leads_h: &[i64]) -> Vec<LeadSummary> {
    leads_h
        .iter()
        .filter_map(|&lead| {
            let s: Vec<&TrackErrorSample> = samples.iter().filter(|s| s.lead_h == lead).collect();
            if s.is_empty() {
                return None;
            }
            let n = s.len() as f64;
            let at: Vec<f64> = s.iter().filter_map(|x| x.at_km).collect();
            let ct: Vec<f64> = s.iter().filter_map(|x| x.ct_km).collect();
            Some(LeadSummary {
                lead_h: lead,
                error_km: (s.iter().map(|x| x.error_km.powi(2)).sum::<f64>() / n).sqrt(),
                spread_km: (s.iter().map(|x| x.spread_km.powi(2)).sum::<f64>() / n).sqrt(),
                n_cases: s.len(),
                at_stats: Summary::of(&at),
                ct_stats: Summary::of(&ct),
            })
        })
        .collect()
}
