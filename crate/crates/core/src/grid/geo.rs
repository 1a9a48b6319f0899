//! Spherical geodesy on a mean-radius Earth.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mean Earth radius in kilometers.
pub const EARTH_RADIUS_KM: f64 = 6371.0;
/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = EARTH_RADIUS_KM * 1000.0;

const COINCIDENT_DEG: f64 = 1e-9;

/// A position on the sphere. Longitude is kept in `[-180, 180)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    /// Builds a point, wrapping the longitude.
    ///
    /// Panics if `lat` is outside `[-90, 90]` or not finite; use
    /// [`GeoPoint::try_new`] for untrusted input.
    pub fn new(lat: f64, lon: f64) -> Self {
        Self::try_new(lat, lon).expect("latitude out of range")
    }

    pub fn try_new(lat: f64, lon: f64) -> Result<Self> {
        if !lat.is_finite() || !lon.is_finite() || !(-90.0..=90.0).contains(&lat) {
            return Err(Error::InvalidField(format!("invalid position ({lat}, {lon})")));
        }
        Ok(Self { lat, lon: normalize_lon(lon) })
    }

    pub(crate) fn to_unit(self) -> [f64; 3] {
        let (phi, lam) = (self.lat.to_radians(), self.lon.to_radians());
        [phi.cos() * lam.cos(), phi.cos() * lam.sin(), phi.sin()]
    }

    pub(crate) fn from_unit(v: [f64; 3]) -> Self {
        let h = (v[0] * v[0] + v[1] * v[1]).sqrt();
        let lat = v[2].atan2(h).to_degrees().clamp(-90.0, 90.0);
        let lon = if h == 0.0 { 0.0 } else { v[1].atan2(v[0]).to_degrees() };
        Self { lat, lon: normalize_lon(lon) }
    }
}

/// Wraps a longitude into `[-180, 180)`.
pub fn normalize_lon(lon: f64) -> f64 {
    let l = (lon + 180.0).rem_euclid(360.0) - 180.0;
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if l >= 180.0 {
        l - 360.0
    } else {
        l
    }
}

/// Signed longitude difference `b - a` wrapped into `[-180, 180)`.
pub fn lon_delta(a: f64, b: f64) -> f64 {
    normalize_lon(b - a)
}

/// Great-circle distance in kilometers.
pub fn haversine_km(a: GeoPoint, b: GeoPoint) -> f64 {
    let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
    let dphi = p2 - p1;
    let dlam = lon_delta(a.lon, b.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dlam / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * h.sqrt().atan2((1.0 - h).max(0.0).sqrt())
}

/// Initial great-circle bearing from `a` to `b`, degrees clockwise from north
/// in `[0, 360)`.
pub fn azimuth_deg(a: GeoPoint, b: GeoPoint) -> Result<f64> {
    if (a.lat - b.lat).abs() < COINCIDENT_DEG && lon_delta(a.lon, b.lon).abs() < COINCIDENT_DEG {
        return Err(Error::CoincidentPoints);
    }
    let ua = a.to_unit();
    let ub = b.to_unit();
    if dot(ua, ub) < -1.0 + 1e-15 {
        return Err(Error::AntipodalPoints);
    }
    let (p1, p2) = (a.lat.to_radians(), b.lat.to_radians());
    let dlam = lon_delta(a.lon, b.lon).to_radians();
    let y = dlam.sin() * p2.cos();
    let x = p1.cos() * p2.sin() - p1.sin() * p2.cos() * dlam.cos();
    let az = y.atan2(x).to_degrees().rem_euclid(360.0);
    Ok(if az >= 360.0 { 0.0 } else { az })
}

/// Point reached by travelling `dist_km` from `a` along initial bearing
/// `bearing_deg`.
pub fn destination(a: GeoPoint, bearing_deg: f64, dist_km: f64) -> GeoPoint {
    let delta = dist_km / EARTH_RADIUS_KM;
    let theta = bearing_deg.to_radians();
    let p1 = a.lat.to_radians();
    let l1 = a.lon.to_radians();
    let sin_p2 = p1.sin() * delta.cos() + p1.cos() * delta.sin() * theta.cos();
    let p2 = sin_p2.clamp(-1.0, 1.0).asin();
    let l2 = l1 + (theta.sin() * delta.sin() * p1.cos()).atan2(delta.cos() - p1.sin() * sin_p2);
    GeoPoint { lat: p2.to_degrees(), lon: normalize_lon(l2.to_degrees()) }
}

/// Displaces `a` by a vector given in a local east/north tangent plane (km).
pub fn offset_en(a: GeoPoint, east_km: f64, north_km: f64) -> GeoPoint {
    let dist = east_km.hypot(north_km);
    if dist == 0.0 {
        return a;
    }
    destination(a, east_km.atan2(north_km).to_degrees(), dist)
}

/// Local east/north components (km) of `b` as seen from `a`: distance times
/// sine and cosine of the initial bearing. Zero when the points coincide.
pub fn local_en(a: GeoPoint, b: GeoPoint) -> (f64, f64) {
    let d = haversine_km(a, b);
    match azimuth_deg(a, b) {
        Ok(az) => {
            let r = az.to_radians();
            (d * r.sin(), d * r.cos())
        }
        Err(_) => (0.0, 0.0),
    }
}

/// Centroid on the sphere: mean of unit vectors, renormalized. `None` for an
/// empty slice or when the vectors cancel.
pub fn spherical_centroid(points: &[GeoPoint]) -> Option<GeoPoint> {
    let first = *points.first()?;
    // exact for coincident points, which the unit-vector round trip is not
    if points.iter().all(|&p| p == first) {
        return Some(first);
    }
    let mut s = [0.0; 3];
    for p in points {
        let u = p.to_unit();
        s[0] += u[0];
        s[1] += u[1];
        s[2] += u[2];
    }
    let n = norm(s);
    if n < 1e-12 * points.len() as f64 {
        return None;
    }
    Some(GeoPoint::from_unit([s[0] / n, s[1] / n, s[2] / n]))
}

/// Distance (km) from `p` to the minor great-circle arc between `a` and `b`.
pub fn point_segment_distance_km(p: GeoPoint, a: GeoPoint, b: GeoPoint) -> f64 {
    point_segment_distance_unit(p.to_unit(), a.to_unit(), b.to_unit())
}

pub(crate) fn point_segment_distance_unit(p: [f64; 3], a: [f64; 3], b: [f64; 3]) -> f64 {
    let n = cross(a, b);
    let nn = norm(n);
    if nn < 1e-12 {
        return arc_km(p, a).min(arc_km(p, b));
    }
    let n = [n[0] / nn, n[1] / nn, n[2] / nn];
    // p's foot on the great circle lies inside the arc iff it is on the
    // inner side of both endpoint normals.
    if dot(cross(a, p), n) >= 0.0 && dot(cross(p, b), n) >= 0.0 {
        let s = dot(p, n).clamp(-1.0, 1.0);
        EARTH_RADIUS_KM * s.abs().asin()
    } else {
        arc_km(p, a).min(arc_km(p, b))
    }
}

pub(crate) fn arc_km(a: [f64; 3], b: [f64; 3]) -> f64 {
    EARTH_RADIUS_KM * norm(cross(a, b)).atan2(dot(a, b))
}

pub(crate) fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn norm(a: [f64; 3]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn haversine_reference_distances() {
        let p = GeoPoint::new(10.0, 20.0);
        assert_eq!(haversine_km(p, p), 0.0);
        // analytic half and quarter circumference of a 6371 km sphere
        let half = PI * 6371.0;
        assert_abs_diff_eq!(half, 20015.09, epsilon = 0.01);
        assert_abs_diff_eq!(haversine_km(GeoPoint::new(0.0, 0.0), GeoPoint::new(0.0, 180.0)), half, epsilon = 1e-6);
        assert_abs_diff_eq!(
            haversine_km(GeoPoint::new(0.0, 0.0), GeoPoint::new(90.0, 0.0)),
            half / 2.0,
            epsilon = 1e-6
        );
        assert_abs_diff_eq!(haversine_km(GeoPoint::new(0.0, 0.0), GeoPoint::new(90.0, 0.0)), 10007.54, epsilon = 0.01);
    }

    #[test]
    fn distance_across_dateline() {
        let a = GeoPoint::new(0.0, 179.5);
        let b = GeoPoint::new(0.0, -179.5);
        assert_abs_diff_eq!(haversine_km(a, b), PI * 6371.0 / 180.0, epsilon = 1e-6);
    }

    #[test]
    fn azimuth_cardinal_directions() {
        let o = GeoPoint::new(0.0, 0.0);
        assert_abs_diff_eq!(azimuth_deg(o, GeoPoint::new(10.0, 0.0)).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(azimuth_deg(o, GeoPoint::new(0.0, 10.0)).unwrap(), 90.0, epsilon = 1e-12);
        assert_abs_diff_eq!(azimuth_deg(o, GeoPoint::new(-10.0, 0.0)).unwrap(), 180.0, epsilon = 1e-12);
        assert_abs_diff_eq!(azimuth_deg(o, GeoPoint::new(0.0, -10.0)).unwrap(), 270.0, epsilon = 1e-12);
    }

    // Napier's-analogy form of the bearing, an independent route to the
    // standard atan2 formula.
    fn bearing_napier(a: GeoPoint, b: GeoPoint) -> f64 {
        let colat_a = (90.0 - a.lat).to_radians();
        let colat_b = (90.0 - b.lat).to_radians();
        let dl = (b.lon - a.lon).to_radians();
        // spherical triangle pole-A-B: solve angle at A from two sides and
        // the included angle via the tangent half-angle formulas
        let t1 = ((colat_b - colat_a) / 2.0).cos() / ((colat_b + colat_a) / 2.0).cos() / (dl / 2.0).tan();
        let t2 = ((colat_b - colat_a) / 2.0).sin() / ((colat_b + colat_a) / 2.0).sin() / (dl / 2.0).tan();
        let half_sum = t1.atan();
        let half_diff = t2.atan();
        (half_sum + half_diff).to_degrees()
    }

    #[test]
    fn azimuth_matches_napier_oracle() {
        let a = GeoPoint::new(10.0, 10.0);
        let b = GeoPoint::new(20.0, 20.0);
        let oracle = bearing_napier(a, b);
        assert_abs_diff_eq!(azimuth_deg(a, b).unwrap(), oracle, epsilon = 1e-6);
        // frozen from a 40-digit evaluation of the atan2 bearing formula
        assert_abs_diff_eq!(azimuth_deg(a, b).unwrap(), 42.814_068_457_743_35, epsilon = 1e-9);
    }

    #[test]
    fn azimuth_rejects_degenerate_pairs() {
        let p = GeoPoint::new(5.0, 5.0);
        assert!(matches!(azimuth_deg(p, p), Err(Error::CoincidentPoints)));
        let q = GeoPoint::new(-5.0, -175.0);
        assert!(matches!(azimuth_deg(p, q), Err(Error::AntipodalPoints)));
    }

    #[test]
    fn destination_round_trip() {
        let a = GeoPoint::new(15.0, 130.0);
        let b = destination(a, 37.0, 500.0);
        assert_abs_diff_eq!(haversine_km(a, b), 500.0, epsilon = 1e-6);
        assert_abs_diff_eq!(azimuth_deg(a, b).unwrap(), 37.0, epsilon = 1e-9);
    }

    #[test]
    fn centroid_of_symmetric_pair() {
        let c = spherical_centroid(&[GeoPoint::new(1.0, 30.0), GeoPoint::new(-1.0, 30.0)]).unwrap();
        assert_abs_diff_eq!(c.lat, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.lon, 30.0, epsilon = 1e-12);
        assert!(spherical_centroid(&[]).is_none());
    }

    #[test]
    fn segment_distance_uses_interior_of_arc() {
        let a = GeoPoint::new(0.0, 0.0);
        let b = GeoPoint::new(0.0, 4.0);
        // midpoint offset north by 0.5 degrees: nearest point is inside the arc
        let p = GeoPoint::new(0.5, 2.0);
        let deg = PI * 6371.0 / 180.0;
        assert_abs_diff_eq!(point_segment_distance_km(p, a, b), 0.5 * deg, epsilon = 1e-6);
        // beyond the end: distance to the endpoint
        let q = GeoPoint::new(0.0, 5.0);
        assert_abs_diff_eq!(point_segment_distance_km(q, a, b), deg, epsilon = 1e-6);
        // degenerate segment
        assert_abs_diff_eq!(point_segment_distance_km(q, b, b), deg, epsilon = 1e-6);
    }

    #[test]
    fn lon_normalization() {
        assert_eq!(normalize_lon(180.0), -180.0);
        assert_eq!(normalize_lon(-180.0), -180.0);
        assert_eq!(normalize_lon(370.0), 10.0);
        assert!(normalize_lon(-1e-18) < 180.0);
    }

    fn arb_point() -> impl Strategy<Value = GeoPoint> {
        (-89.0f64..89.0, -180.0f64..180.0).prop_map(|(la, lo)| GeoPoint::new(la, lo))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn haversine_symmetric_and_triangle(a in arb_point(), b in arb_point(), c in arb_point()) {
            let ab = haversine_km(a, b);
            prop_assert!(ab >= 0.0);
            prop_assert!((ab - haversine_km(b, a)).abs() < 1e-9);
            prop_assert!(haversine_km(a, c) <= ab + haversine_km(b, c) + 1e-6);
        }
    }
}
