//! The per-step pieces of the tracking loop.

use serde::Serialize;

use super::config::TrackerConfig;
use super::track::{Phase, TrackPoint};
use crate::error::{Error, Result};
use crate::grid::search::{points_within, Extremum};
use crate::grid::{
    azimuth_deg, destination, downsample, haversine_km, local_extrema, offset_en, relative_vorticity,
    spherical_centroid, ExtremeMode, Field, FieldSet, GeoPoint, Level, Variable,
};

/// Predicted next position plus the length of the advection displacement.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstGuess {
    pub point: GeoPoint,
    pub advection_km: f64,
}

/// Weighted steering wind (u, v) in m/s averaged within the steering radius.
pub fn steering_wind(center: GeoPoint, fields: &FieldSet, cfg: &TrackerConfig) -> Result<(f64, f64)> {
    let (mut u, mut v) = (0.0, 0.0);
    for s in &cfg.steering_levels {
        let level = Level::Hpa(s.level_hpa);
        let missing = || Error::MissingSteeringFields(s.level_hpa);
        let uf = fields.get(Variable::U, level).map_err(|_| missing())?;
        let vf = fields.get(Variable::V, level).map_err(|_| missing())?;
        let (mut su, mut sv, mut n) = (0.0, 0.0, 0usize);
        for (i, j, _) in points_within(&uf.spec, center, cfg.steering_avg_radius_km) {
            if let (Some(a), Some(b)) = (uf.value(i, j), vf.value(i, j)) {
                su += a;
                sv += b;
                n += 1;
            }
        }
        if n == 0 {
            return Err(missing());
        }
        u += s.weight * su / n as f64;
        v += s.weight * sv / n as f64;
    }
    Ok((u, v))
}

/// Next-position estimate from the last one or two centers. One point:
/// advect by the steering wind over one step. Two points: the midpoint of
/// the advected and the linearly extrapolated positions.
pub fn first_guess(history: &[TrackPoint], fields: &FieldSet, cfg: &TrackerConfig) -> Result<FirstGuess> {
    let last = history.last().ok_or(Error::EmptyInput("first guess needs a track history"))?;
    let (u, v) = steering_wind(last.center, fields, cfg)?;
    let dt = cfg.step_seconds();
    let (east_km, north_km) = (u * dt / 1000.0, v * dt / 1000.0);
    let advected = offset_en(last.center, east_km, north_km);
    let advection_km = east_km.hypot(north_km);

    let point = match history {
        [.., prev, last] => {
            let extrapolated = extrapolate(prev.center, last.center);
            spherical_centroid(&[extrapolated, advected]).unwrap_or(advected)
        }
        _ => advected,
    };
    Ok(FirstGuess { point, advection_km })
}

/// Continues the great circle through `a` and `b` by the length `a`-`b`.
fn extrapolate(a: GeoPoint, b: GeoPoint) -> GeoPoint {
    let d = haversine_km(a, b);
    match azimuth_deg(a, b) {
        Ok(az) => destination(a, az, 2.0 * d),
        Err(_) => b,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CandidateSource {
    MslMinimum,
    VorticityMaximum,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub point: GeoPoint,
    pub i: usize,
    pub j: usize,
    pub source: CandidateSource,
    /// Distance to the first guess, km.
    pub dist_km: f64,
}

/// Vorticity sign flipped in the southern hemisphere so that cyclones are
/// positive everywhere.
fn cyclonic(f: &Field, southern: bool) -> Result<Field> {
    if southern {
        f.map_values(f.variable, |x| -x)
    } else {
        Ok(f.clone())
    }
}

/// Extreme of `fine` inside the coarse cell centred on coarse point `e`.
fn refine(fine: &Field, e: &Extremum, factor: usize, mode: ExtremeMode) -> Option<(usize, usize, f64)> {
    let spec = &fine.spec;
    let half = (factor / 2) as i64;
    let (ci, cj) = ((e.i * factor) as i64, (e.j * factor) as i64);
    let periodic = spec.wraps_lon && (spec.dlon * spec.nlon as f64 - 360.0).abs() < 1e-6;
    let mut best: Option<(usize, usize, f64)> = None;
    for i in (ci - half)..=(ci + half) {
        if i < 0 || i >= spec.nlat as i64 {
            continue;
        }
        for j in (cj - half)..=(cj + half) {
            let j = if periodic {
                j.rem_euclid(spec.nlon as i64)
            } else if j < 0 || j >= spec.nlon as i64 {
                continue;
            } else {
                j
            };
            let (i, j) = (i as usize, j as usize);
            let Some(v) = fine.value(i, j) else { continue };
            let better = match best {
                None => true,
                Some((_, _, b)) => match mode {
                    ExtremeMode::Min => v < b,
                    ExtremeMode::Max => v > b,
                },
            };
            if better {
                best = Some((i, j, v));
            }
        }
    }
    best
}

/// Candidate centers near `guess`: MSL minima and cyclonic 10 m vorticity
/// maxima found on the coarsened grid, each relocated to the matching
/// extreme of the full-resolution field within its coarse cell, then
/// de-duplicated and sorted by distance to the guess.
pub fn find_candidates(fields: &FieldSet, guess: GeoPoint, cfg: &TrackerConfig) -> Result<Vec<Candidate>> {
    let factor = cfg.coarsen_factor;
    let msl = fields.get(Variable::Msl, Level::Surface)?;
    let u = fields.get(Variable::U, Level::Surface)?;
    let v = fields.get(Variable::V, Level::Surface)?;
    let southern = guess.lat < 0.0;

    let coarse_msl = downsample(msl, factor)?;
    let coarse_vort = cyclonic(&relative_vorticity(&downsample(u, factor)?, &downsample(v, factor)?)?, southern)?;
    let fine_vort = cyclonic(&*fields.vorticity(Level::Surface)?, southern)?;

    let mut found = Vec::new();
    for e in local_extrema(&coarse_msl, guess, cfg.search_radius_km, ExtremeMode::Min) {
        if let Some((i, j, _)) = refine(msl, &e, factor, ExtremeMode::Min) {
            found.push((i, j, CandidateSource::MslMinimum));
        }
    }
    for e in local_extrema(&coarse_vort, guess, cfg.search_radius_km, ExtremeMode::Max) {
        if e.value <= 0.0 {
            continue;
        }
        if let Some((i, j, _)) = refine(&fine_vort, &e, factor, ExtremeMode::Max) {
            found.push((i, j, CandidateSource::VorticityMaximum));
        }
    }

    let mut cands: Vec<Candidate> = found
        .into_iter()
        .map(|(i, j, source)| {
            let point = msl.spec.point(i, j);
            Candidate { point, i, j, source, dist_km: haversine_km(guess, point) }
        })
        .filter(|c| c.dist_km <= cfg.search_radius_km)
        .collect();
    cands.sort_by(|a, b| {
        a.dist_km
            .total_cmp(&b.dist_km)
            .then((a.source as u8).cmp(&(b.source as u8)))
            .then(a.i.cmp(&b.i))
            .then(a.j.cmp(&b.j))
    });

    let cell_km = msl.spec.dlat_km() * factor as f64;
    let mut kept: Vec<Candidate> = Vec::with_capacity(cands.len());
    for c in cands {
        if kept.iter().all(|k| haversine_km(k.point, c.point) >= cell_km) {
            kept.push(c);
        }
    }
    Ok(kept)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RejectReason {
    Vorticity,
    Wind,
    Thickness,
}

/// Outcome of checking one candidate against the criteria table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Validation {
    pub accepted: bool,
    pub reason: Option<RejectReason>,
    /// Peak |850 hPa vorticity| within the criteria radius, 1/s.
    pub peak_vorticity: f64,
    /// Peak 10 m wind within the criteria radius when the land check ran.
    pub peak_wind: Option<f64>,
    pub over_land: bool,
}

fn peak_abs(f: &Field, c: GeoPoint, radius_km: f64) -> Result<f64> {
    points_within(&f.spec, c, radius_km)
        .into_iter()
        .filter_map(|(i, j, _)| f.value(i, j))
        .map(f64::abs)
        .reduce(f64::max)
        .ok_or(Error::EmptyNeighborhood { lat: c.lat, lon: c.lon, radius_km })
}

/// Applies the criteria to candidate `c`:
/// peak |850 hPa vorticity| within the criteria radius must reach the
/// threshold; over land (mask present and at or above the land fraction)
/// the peak 10 m wind must exceed its threshold; for extratropical phase
/// with the thickness check enabled, an 850-200 hPa thickness maximum must
/// lie within the radius.
pub fn validate_candidate(
    c: GeoPoint,
    fields: &FieldSet,
    land_mask: Option<&Field>,
    phase: Phase,
    cfg: &TrackerConfig,
) -> Result<Validation> {
    let r = cfg.criteria_radius_km;
    let vort = fields.vorticity(Level::Hpa(850))?;
    let peak_vorticity = peak_abs(&vort, c, r)?;
    let mut out = Validation { accepted: true, reason: None, peak_vorticity, peak_wind: None, over_land: false };
    if peak_vorticity < cfg.vort_threshold {
        out.accepted = false;
        out.reason = Some(RejectReason::Vorticity);
        return Ok(out);
    }

    if let Some(mask) = land_mask {
        let frac = mask.spec.nearest(c).and_then(|(i, j)| mask.value(i, j)).unwrap_or(0.0);
        if frac >= cfg.land_fraction_threshold {
            out.over_land = true;
            let ws = fields.wind_speed(Level::Surface)?;
            let peak = peak_abs(&ws, c, r)?;
            out.peak_wind = Some(peak);
            if !(peak > cfg.wind10m_threshold) {
                out.accepted = false;
                out.reason = Some(RejectReason::Wind);
                return Ok(out);
            }
        }
    }

    if phase == Phase::Extratropical && cfg.require_thickness_max_when_extratropical {
        let (lo, hi) = cfg.thickness_levels;
        let thk = fields.thickness(lo, hi)?;
        if local_extrema(&thk, c, r, ExtremeMode::Max).is_empty() {
            out.accepted = false;
            out.reason = Some(RejectReason::Thickness);
        }
    }
    Ok(out)
}

/// Limits the step from `from` to `proposed` to `max_displacement_factor`
/// times the previous displacement. With no previous displacement the cap
/// is the advection distance, floored at `first_step_cap_floor_km`.
pub fn constrain_displacement(
    prev_disp_km: f64,
    proposed: GeoPoint,
    from: GeoPoint,
    advection_km: f64,
    cfg: &TrackerConfig,
) -> GeoPoint {
    let cap = if prev_disp_km > 0.0 {
        cfg.max_displacement_factor * prev_disp_km
    } else {
        advection_km.max(cfg.first_step_cap_floor_km)
    };
    let d = haversine_km(from, proposed);
    if d <= cap {
        return proposed;
    }
    match azimuth_deg(from, proposed) {
        Ok(az) => destination(from, az, cap),
        Err(_) => proposed,
    }
}
