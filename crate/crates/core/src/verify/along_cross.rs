//! Along-track and cross-track decomposition of a position error.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{azimuth_deg, haversine_km, GeoPoint};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlongCross {
    /// Positive ahead of the observed motion.
    pub at_km: f64,
    /// Positive to the right of the observed motion.
    pub ct_km: f64,
    /// Direct position error.
    pub dpe_km: f64,
}

/// Decomposes the error of forecast `fc` against observation `ob2`. The
/// observed heading is the direction of the `ob1 -> ob2` great circle on
/// arrival at `ob2`, so both angles are measured at the same point.
pub fn along_cross(ob1: GeoPoint, ob2: GeoPoint, fc: GeoPoint) -> Result<AlongCross> {
    let back = azimuth_deg(ob2, ob1).map_err(|e| match e {
        Error::CoincidentPoints => Error::CoincidentObservations,
        e => e,
    })?;
    let heading = (back + 180.0) % 360.0;
    let dpe = haversine_km(ob2, fc);
    let bearing = match azimuth_deg(ob2, fc) {
        Ok(b) => b,
        Err(Error::CoincidentPoints) => return Ok(AlongCross { at_km: 0.0, ct_km: 0.0, dpe_km: 0.0 }),
        Err(e) => return Err(e),
    };
    let delta = (bearing - heading).to_radians();
    Ok(AlongCross { at_km: dpe * delta.cos(), ct_km: dpe * delta.sin(), dpe_km: dpe })
}
