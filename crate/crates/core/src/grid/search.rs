//! Radius-limited extreme-value searches.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::field::{Field, GridSpec};
use super::geo::{haversine_km, GeoPoint, EARTH_RADIUS_KM};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtremeMode {
    Min,
    Max,
}

impl ExtremeMode {
    /// True when `a` is strictly more extreme than `b`.
    #[inline]
    fn beats(self, a: f64, b: f64) -> bool {
        match self {
            ExtremeMode::Min => a < b,
            ExtremeMode::Max => a > b,
        }
    }
}

/// A grid point selected by a search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extremum {
    pub i: usize,
    pub j: usize,
    pub point: GeoPoint,
    pub value: f64,
    /// Distance from the search center, km.
    pub dist_km: f64,
}

/// Grid indices within `radius_km` of `center`, with their distances.
pub fn points_within(spec: &GridSpec, center: GeoPoint, radius_km: f64) -> Vec<(usize, usize, f64)> {
    let r_deg = (radius_km / EARTH_RADIUS_KM).to_degrees();
    let pad = spec.dlat.abs();
    let (la, lb) = (spec.row_f(center.lat - r_deg - pad), spec.row_f(center.lat + r_deg + pad));
    let (rlo, rhi) = (la.min(lb), la.max(lb));
    if rhi < 0.0 || rlo > (spec.nlat - 1) as f64 {
        return Vec::new();
    }
    let i0 = rlo.floor().max(0.0) as usize;
    let i1 = (rhi.ceil() as usize).min(spec.nlat - 1);

    let max_lat = (center.lat.abs() + r_deg).min(90.0);
    let half_lon = if max_lat >= 89.5 { 360.0 } else { r_deg / max_lat.to_radians().cos() + spec.dlon };

    let mut cols: Vec<usize> = Vec::new();
    if half_lon * 2.0 >= 360.0 {
        cols.extend(0..spec.nlon);
    } else {
        let offset = (center.lon - spec.lon0).rem_euclid(360.0);
        let mut push_range = |base: f64| {
            let lo = ((base - half_lon) / spec.dlon).floor() as i64;
            let hi = ((base + half_lon) / spec.dlon).ceil() as i64;
            for k in lo..=hi {
                if spec.wraps_lon {
                    cols.push(k.rem_euclid(spec.nlon as i64) as usize);
                } else if k >= 0 && (k as usize) < spec.nlon {
                    cols.push(k as usize);
                }
            }
        };
        push_range(offset);
        if !spec.wraps_lon {
            push_range(offset - 360.0);
        }
        cols.sort_unstable();
        cols.dedup();
    }

    let mut out = Vec::new();
    for i in i0..=i1 {
        for &j in &cols {
            let d = haversine_km(center, spec.point(i, j));
            if d <= radius_km {
                out.push((i, j, d));
            }
        }
    }
    out
}

fn tie_order(a: &Extremum, b: &Extremum) -> Ordering {
    a.dist_km.partial_cmp(&b.dist_km).unwrap_or(Ordering::Equal).then(a.i.cmp(&b.i)).then(a.j.cmp(&b.j))
}

/// Most extreme valid value within `radius_km` of `center`. Ties go to the
/// point nearest the center, then to the smallest (row, column).
pub fn neighborhood_extreme(f: &Field, center: GeoPoint, radius_km: f64, mode: ExtremeMode) -> Result<Extremum> {
    if !(radius_km > 0.0) {
        return Err(Error::Config(format!("radius must be positive, got {radius_km}")));
    }
    let mut best: Option<Extremum> = None;
    for (i, j, d) in points_within(&f.spec, center, radius_km) {
        let Some(value) = f.value(i, j) else { continue };
        let cand = Extremum { i, j, point: f.spec.point(i, j), value, dist_km: d };
        best = match best {
            None => Some(cand),
            Some(b) if mode.beats(value, b.value) => Some(cand),
            Some(b) if value == b.value && tie_order(&cand, &b) == Ordering::Less => Some(cand),
            keep => keep,
        };
    }
    best.ok_or(Error::EmptyNeighborhood { lat: center.lat, lon: center.lon, radius_km })
}

/// Whether `(i, j)` is strictly more extreme than all eight neighbours.
/// Points without a full neighbourhood (non-periodic edges) never qualify.
pub fn is_strict_extremum(f: &Field, i: usize, j: usize, mode: ExtremeMode) -> bool {
    let spec = &f.spec;
    let periodic = spec.wraps_lon && (spec.dlon * spec.nlon as f64 - 360.0).abs() < 1e-6;
    if i == 0 || i + 1 >= spec.nlat {
        return false;
    }
    if !periodic && (j == 0 || j + 1 >= spec.nlon) {
        return false;
    }
    let Some(c) = f.value(i, j) else { return false };
    for di in [-1i64, 0, 1] {
        for dj in [-1i64, 0, 1] {
            if di == 0 && dj == 0 {
                continue;
            }
            let ni = (i as i64 + di) as usize;
            let nj = (j as i64 + dj).rem_euclid(spec.nlon as i64) as usize;
            match f.value(ni, nj) {
                Some(n) if mode.beats(c, n) => {}
                _ => return false,
            }
        }
    }
    true
}

/// Strict local extrema inside the circle, nearest first.
pub fn local_extrema(f: &Field, center: GeoPoint, radius_km: f64, mode: ExtremeMode) -> Vec<Extremum> {
    let mut out: Vec<Extremum> = points_within(&f.spec, center, radius_km)
        .into_iter()
        .filter(|&(i, j, _)| is_strict_extremum(f, i, j, mode))
        .map(|(i, j, d)| Extremum { i, j, point: f.spec.point(i, j), value: f.get(i, j), dist_km: d })
        .collect();
    out.sort_by(tie_order);
    out
}
