//! Track verification metrics.

pub mod along_cross;
pub mod mann_whitney;
pub mod metrics;
pub mod strike;

pub use along_cross::{along_cross, AlongCross};
pub use mann_whitney::{mann_whitney_u, mann_whitney_u_normal, MannWhitney, PMethod};
pub use metrics::{
    acc_error, acc_spread, default_leads, error_tc, spread_tc, summarize_leads, track_error_samples, LeadSummary,
    SpreadCase, Summary, TrackErrorSample,
};
pub use strike::{merge_strike, strike_probability, StrikeProbabilityField, DEFAULT_IMPACT_RADIUS_KM};
