//! Probabilistic skill of ensemble tercile-event forecasts.

pub mod roc;
pub mod tercile;

pub use roc::{roc_curve, roca, rocass, RocCurve, RocTally, Thresholds};
pub use tercile::{event_count, event_probability, tercile_thresholds, EventDefinition, Sense};
