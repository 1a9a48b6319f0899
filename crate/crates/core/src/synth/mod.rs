//! Synthetic vortices, truth tracks, and stochastic ensembles with known
//! statistics.

pub mod ensemble;
pub mod scenario;
pub mod truth;
pub mod vortex;

pub use ensemble::{
    derive_seed, ensemble_fields, expected_rms_spread, expected_spread, gen_ensemble, member_fields, replicate_spread,
    EnsembleNoiseSpec,
};
pub use scenario::{build_scenario, write_scenario, ScenarioConfig, ScenarioOutputs, EXAMPLE_SCENARIO};
pub use truth::{advect_truth, Motion, TruthRun, TruthScenario};
pub use vortex::{gen_vortex_field, gen_vortex_field_opt, Steering, VortexSpec};
