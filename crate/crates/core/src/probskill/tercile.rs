//! Tercile event definitions and ensemble event probabilities.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Level, Variable};
use crate::par;
use crate::verify::metrics::quantile_sorted;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sense {
    /// Value above the upper tercile boundary.
    Upper,
    /// Value below the lower tercile boundary.
    Lower,
}

impl Sense {
    /// Event test; a value equal to the threshold is not an event.
    pub fn is_event(self, value: f64, threshold: f64) -> bool {
        match self {
            Sense::Upper => value > threshold,
            Sense::Lower => value < threshold,
        }
    }
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Upper => "upper",
            Sense::Lower => "lower",
        })
    }
}

impl FromStr for Sense {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "upper" => Ok(Sense::Upper),
            "lower" => Ok(Sense::Lower),
            _ => Err(Error::Config(format!("unknown tercile sense '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EventDefinition {
    pub variable: Variable,
    pub level: Level,
    pub sense: Sense,
    pub threshold: Field,
}

impl EventDefinition {
    pub fn from_terciles(sense: Sense, lower: &Field, upper: &Field) -> Self {
        let threshold = match sense {
            Sense::Upper => upper.clone(),
            Sense::Lower => lower.clone(),
        };
        Self { variable: threshold.variable, level: threshold.level, sense, threshold }
    }
}

/// Per-grid-point 1/3 and 2/3 quantiles of a sample of fields, with linear
/// interpolation between order statistics. Points with fewer than three
/// unmasked values are masked in the output.
pub fn tercile_thresholds(sample: &[Field]) -> Result<(Field, Field)> {
    if sample.len() < 3 {
        return Err(Error::InsufficientSample { needed: 3, got: sample.len() });
    }
    let first = &sample[0];
    for f in &sample[1..] {
        if !f.spec.approx_eq(&first.spec) || f.variable != first.variable || f.level != first.level {
            return Err(Error::SpecMismatch("tercile sample fields differ in grid, variable, or level".into()));
        }
    }
    let n = first.spec.len();
    let pairs: Vec<(f64, f64)> = par::map_range(n, |k| {
        let mut v: Vec<f64> =
            sample.iter().filter(|f| !f.mask.as_ref().is_some_and(|m| m[k])).map(|f| f.values[k]).collect();
        if v.len() < 3 {
            return (f64::NAN, f64::NAN);
        }
        v.sort_by(f64::total_cmp);
        (quantile_sorted(&v, 1.0 / 3.0), quantile_sorted(&v, 2.0 / 3.0))
    });
    let (lo, hi): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let mk = |v| Field::with_missing(first.spec, v, first.variable, first.level, first.valid_time);
    Ok((mk(lo)?, mk(hi)?))
}

/// Fraction of member values that are events.
pub fn event_probability(member_values: &[f64], threshold: f64, sense: Sense) -> f64 {
    if member_values.is_empty() {
        return 0.0;
    }
    event_count(member_values, threshold, sense) as f64 / member_values.len() as f64
}

pub fn event_count(member_values: &[f64], threshold: f64, sense: Sense) -> usize {
    member_values.iter().filter(|&&v| sense.is_event(v, threshold)).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use chrono::{TimeZone, Utc};

    fn fields(values: &[f64]) -> Vec<Field> {
        let g = GridSpec::new(0.0, 0.0, 1.0, 1.0, 2, 2, false).unwrap();
        let t = Utc.with_ymd_and_hms(2018, 1, 1, 0, 0, 0).unwrap();
        values.iter().map(|&v| Field::constant(g, v, Variable::T, Level::Hpa(850), t).unwrap()).collect()
    }

    #[test]
    fn constant_sample() {
        let (lo, hi) = tercile_thresholds(&fields(&[5.0; 6])).unwrap();
        assert!(lo.values.iter().chain(&hi.values).all(|&v| v == 5.0));
    }

    #[test]
    fn one_to_nine() {
        let s: Vec<f64> = (1..=9).map(f64::from).collect();
        let (lo, hi) = tercile_thresholds(&fields(&s)).unwrap();
        assert!((lo.values[0] - 11.0 / 3.0).abs() < 1e-12);
        assert!((hi.values[0] - 19.0 / 3.0).abs() < 1e-12);

        let shifted: Vec<f64> = s.iter().map(|v| v + 100.0).collect();
        let (lo2, hi2) = tercile_thresholds(&fields(&shifted)).unwrap();
        assert!((lo2.values[0] - lo.values[0] - 100.0).abs() < 1e-9);
        assert!((hi2.values[3] - hi.values[3] - 100.0).abs() < 1e-9);
    }

    #[test]
    fn too_small_sample() {
        assert!(matches!(
            tercile_thresholds(&fields(&[1.0, 2.0])),
            Err(Error::InsufficientSample { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn probabilities() {
        assert_eq!(event_probability(&[3.0, 4.0, 5.0], 2.0, Sense::Upper), 1.0);
        let v: Vec<f64> = (0..48).map(|k| if k < 12 { 10.0 } else { 0.0 }).collect();
        assert_eq!(event_probability(&v, 5.0, Sense::Upper), 0.25);
        assert_eq!(event_probability(&[5.0, 5.0], 5.0, Sense::Upper), 0.0);
        assert_eq!(event_probability(&[5.0, 5.0], 5.0, Sense::Lower), 0.0);
        assert_eq!(event_probability(&[4.0, 6.0], 5.0, Sense::Lower), 0.5);
    }
}
