//! Stride coarsening and bilinear refinement.

use super::field::{Field, GridSpec};
use crate::error::{Error, Result};
use crate::par;

/// Resolution change used by the tracker: 0.25 to 1.25 degrees.
pub const DEFAULT_COARSEN_FACTOR: usize = 5;

/// Grid holding every `factor`-th point of `spec`, same origin.
pub fn coarse_spec(spec: &GridSpec, factor: usize) -> Result<GridSpec> {
    let incompatible = Error::IncompatibleFactor { factor, nlat: spec.nlat, nlon: spec.nlon };
    if factor < 2 {
        return Err(incompatible);
    }
    let lat_ok = (spec.nlat - 1).is_multiple_of(factor);
    let periodic = spec.wraps_lon && (spec.dlon * spec.nlon as f64 - 360.0).abs() < 1e-6;
    let (lon_ok, nlon) = if periodic {
        (spec.nlon.is_multiple_of(factor), spec.nlon / factor)
    } else {
        ((spec.nlon - 1).is_multiple_of(factor), (spec.nlon - 1) / factor + 1)
    };
    if !lat_ok || !lon_ok {
        return Err(incompatible);
    }
    let nlat = (spec.nlat - 1) / factor + 1;
    if nlat < 2 || nlon < 2 {
        return Err(incompatible);
    }
    GridSpec::new(
        spec.lat0,
        spec.lon0,
        spec.dlat * factor as f64,
        spec.dlon * factor as f64,
        nlat,
        nlon,
        spec.wraps_lon,
    )
}

/// Keeps every `factor`-th grid point along both axes.
pub fn downsample(f: &Field, factor: usize) -> Result<Field> {
    let spec = coarse_spec(&f.spec, factor)?;
    let mut values = Vec::with_capacity(spec.len());
    for i in 0..spec.nlat {
        for j in 0..spec.nlon {
            values.push(f.get(i * factor, j * factor));
        }
    }
    Field::with_missing(spec, values, f.variable, f.level, f.valid_time)
}

/// Bilinear interpolation of `f` at fractional indices (row, col). `None`
/// when a needed corner is masked or the column is out of range.
pub(crate) fn bilinear_at(f: &Field, r: f64, c: f64) -> Option<f64> {
    let spec = &f.spec;
    let i0 = (r.floor() as usize).min(spec.nlat - 1);
    let i1 = (i0 + 1).min(spec.nlat - 1);
    let wr = r - i0 as f64;
    let j0f = c.floor();
    let mut j0 = j0f as usize;
    let wc = c - j0f;
    let j1 = if spec.wraps_lon {
        j0 %= spec.nlon;
        (j0 + 1) % spec.nlon
    } else {
        if j0 >= spec.nlon {
            return None;
        }
        (j0 + 1).min(spec.nlon - 1)
    };
    let v00 = f.get(i0, j0);
    let v01 = f.get(i0, j1);
    let v10 = f.get(i1, j0);
    let v11 = f.get(i1, j1);
    // zero-weight corners do not need to be valid
    let pick = |v: f64, w: f64| {
        if w == 0.0 {
            Some(0.0)
        } else if v.is_finite() {
            Some(v * w)
        } else {
            None
        }
    };
    let s = pick(v00, (1.0 - wr) * (1.0 - wc))?
        + pick(v01, (1.0 - wr) * wc)?
        + pick(v10, wr * (1.0 - wc))?
        + pick(v11, wr * wc)?;
    Some(s)
}

/// Bilinear interpolation of `f` onto `target`; every target point must fall
/// inside `f`'s domain.
pub fn upsample(f: &Field, target: &GridSpec) -> Result<Field> {
    target.validate()?;
    let src = &f.spec;
    let tol = 1e-9;
    let rows: Vec<f64> = (0..target.nlat).map(|i| src.row_f(target.lat(i))).collect();
    if rows.iter().any(|&r| r < -tol || r > (src.nlat - 1) as f64 + tol) {
        return Err(Error::DomainMismatch);
    }
    let cols: Vec<f64> =
        (0..target.nlon).map(|j| src.col_f(target.lon(j)).ok_or(Error::DomainMismatch)).collect::<Result<_>>()?;

    let mut out = vec![0.0; target.len()];
    par::for_each_row(&mut out, target.nlon, |i, row| {
        let r = rows[i].clamp(0.0, (src.nlat - 1) as f64);
        for (j, v) in row.iter_mut().enumerate() {
            *v = bilinear_at(f, r, cols[j]).unwrap_or(f64::NAN);
        }
    });
    Field::with_missing(*target, out, f.variable, f.level, f.valid_time)
}
