use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One pressure level contributing to the steering (advection) wind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SteeringLevel {
    pub level_hpa: u16,
    pub weight: f64,
}

/// Tracker radii, thresholds, and steering setup.
///
/// Defaults follow the operational table: 445 km candidate search, 278 km
/// criteria radius, 8 m/s over-land 10 m wind, 5e-5 1/s 850 hPa vorticity,
/// 0.25 to 1.25 degree coarsening, and a 3x displacement cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    pub search_radius_km: f64,
    pub criteria_radius_km: f64,
    /// Over-land 10 m wind speed must exceed this (m/s).
    pub wind10m_threshold: f64,
    /// Peak |850 hPa vorticity| must reach this (1/s).
    pub vort_threshold: f64,
    pub coarsen_factor: usize,
    pub max_displacement_factor: f64,
    pub steering_levels: Vec<SteeringLevel>,
    pub steering_avg_radius_km: f64,
    pub require_thickness_max_when_extratropical: bool,
    /// Forecast step, hours.
    pub step_hours: f64,
    /// Lower bound on the displacement cap when no previous displacement
    /// exists (first step or a stationary storm).
    pub first_step_cap_floor_km: f64,
    /// Land-mask values at or above this count as land.
    pub land_fraction_threshold: f64,
    /// Isobaric levels bounding the thickness layer (lower, upper).
    pub thickness_levels: (u16, u16),
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            search_radius_km: 445.0,
            criteria_radius_km: 278.0,
            wind10m_threshold: 8.0,
            vort_threshold: 5e-5,
            coarsen_factor: 5,
            max_displacement_factor: 3.0,
            steering_levels: vec![
                SteeringLevel { level_hpa: 850, weight: 0.5 },
                SteeringLevel { level_hpa: 500, weight: 0.5 },
            ],
            steering_avg_radius_km: 278.0,
            require_thickness_max_when_extratropical: false,
            step_hours: 6.0,
            first_step_cap_floor_km: 100.0,
            land_fraction_threshold: 0.5,
            thickness_levels: (850, 200),
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("search_radius_km", self.search_radius_km),
            ("criteria_radius_km", self.criteria_radius_km),
            ("wind10m_threshold", self.wind10m_threshold),
            ("vort_threshold", self.vort_threshold),
            ("max_displacement_factor", self.max_displacement_factor),
            ("steering_avg_radius_km", self.steering_avg_radius_km),
            ("step_hours", self.step_hours),
            ("first_step_cap_floor_km", self.first_step_cap_floor_km),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.coarsen_factor < 2 {
            return Err(Error::Config("coarsen_factor must be at least 2".into()));
        }
        if self.steering_levels.is_empty() {
            return Err(Error::Config("at least one steering level is required".into()));
        }
        if self.steering_levels.iter().any(|s| !(s.weight > 0.0)) {
            return Err(Error::Config("steering weights must be positive".into()));
        }
        let total: f64 = self.steering_levels.iter().map(|s| s.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("steering weights sum to {total}, expected 1")));
        }
        Ok(())
    }

    pub fn step_seconds(&self) -> f64 {
        self.step_hours * 3600.0
    }
}
