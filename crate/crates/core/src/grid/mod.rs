//! Gridded data model: geometry, fields, derivatives, resampling, searches,
//! and the on-disk raster format.

pub mod field;
pub mod geo;
pub mod gsf;
pub mod resample;
pub mod search;
pub mod vorticity;

pub use field::{Field, FieldKey, FieldSet, GridSpec, Level, Variable};
pub use geo::{
    azimuth_deg, destination, haversine_km, local_en, normalize_lon, offset_en, point_segment_distance_km,
    spherical_centroid, GeoPoint, EARTH_RADIUS_KM,
};
pub use resample::{downsample, upsample};
pub use search::{local_extrema, neighborhood_extreme, ExtremeMode, Extremum};
pub use vorticity::{relative_vorticity, wind_speed};
