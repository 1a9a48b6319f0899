//! Tropical cyclone tracking in gridded ensemble forecasts, and verification
//! of the resulting track, probability, and energy forecasts.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod energy;
pub mod error;
pub mod grid;
pub mod par;
pub mod probskill;
pub mod synth;
pub mod tracker;
pub mod verify;

pub use error::{Error, Result};
