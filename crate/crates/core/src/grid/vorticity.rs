//! Finite-difference wind diagnostics.

use super::field::{Field, Variable};
use super::geo::EARTH_RADIUS_M;
use crate::error::Result;
use crate::par;

/// Rows poleward of this latitude are masked in derivative fields.
pub const POLAR_MASK_LAT: f64 = 89.0;

/// Relative vorticity `dv/dx - du/dy` (1/s) with `dx = R cos(lat) dlon` and
/// `dy = R dlat`. Centered differences inside, one-sided at non-periodic
/// edges; rows poleward of 89 degrees are masked.
pub fn relative_vorticity(u: &Field, v: &Field) -> Result<Field> {
    u.ensure_compatible(v)?;
    let spec = u.spec;
    let (nlat, nlon) = (spec.nlat, spec.nlon);
    let periodic = spec.wraps_lon && (spec.dlon * nlon as f64 - 360.0).abs() < 1e-6;
    let dy = EARTH_RADIUS_M * spec.dlat.to_radians();
    let dlon = spec.dlon.to_radians();

    let mut out = vec![0.0; spec.len()];
    par::for_each_row(&mut out, nlon, |i, row| {
        let lat = spec.lat(i);
        if lat.abs() > POLAR_MASK_LAT {
            row.fill(f64::NAN);
            return;
        }
        let dx = EARTH_RADIUS_M * lat.to_radians().cos() * dlon;
        let (iu, id, sy) = if i == 0 {
            (1, 0, dy)
        } else if i == nlat - 1 {
            (nlat - 1, nlat - 2, dy)
        } else {
            (i + 1, i - 1, 2.0 * dy)
        };
        for (j, z) in row.iter_mut().enumerate() {
            let (jr, jl, sx) = if periodic {
                ((j + 1) % nlon, (j + nlon - 1) % nlon, 2.0 * dx)
            } else if j == 0 {
                (1, 0, dx)
            } else if j == nlon - 1 {
                (nlon - 1, nlon - 2, dx)
            } else {
                (j + 1, j - 1, 2.0 * dx)
            };
            let dvdx = (v.get(i, jr) - v.get(i, jl)) / sx;
            let dudy = (u.get(iu, j) - u.get(id, j)) / sy;
            *z = dvdx - dudy;
        }
    });
    Field::with_missing(spec, out, Variable::Vo, u.level, u.valid_time)
}

/// Pointwise wind speed `sqrt(u^2 + v^2)`.
pub fn wind_speed(u: &Field, v: &Field) -> Result<Field> {
    u.ensure_compatible(v)?;
    let values = u.values.iter().zip(&v.values).map(|(a, b)| a.hypot(*b)).collect();
    Field::with_missing(u.spec, values, Variable::Ws, u.level, u.valid_time)
}
