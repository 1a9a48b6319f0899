//! Cyclone center tracking through gridded forecasts.

pub mod config;
pub mod csv;
pub mod driver;
pub mod steps;
pub mod track;

pub use config::{SteeringLevel, TrackerConfig};
pub use driver::{track_ensemble, track_member, track_members, MemberRun, TrackingContext};
pub use steps::{
    constrain_displacement, find_candidates, first_guess, validate_candidate, Candidate, CandidateSource, FirstGuess,
    RejectReason, Validation,
};
pub use track::{ensemble_mean, EnsembleTrackSet, MemberId, Phase, PhaseSchedule, Track, TrackPoint};
