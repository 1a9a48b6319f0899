//! ROC curve, area, and skill score.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Decision thresholds for a ROC sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Thresholds {
    /// `0, 1/M, ..., 1` plus one threshold above 1, for probabilities from
    /// an M-member ensemble.
    Ensemble(usize),
    /// Every distinct forecast value plus one above the maximum.
    Distinct,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// (POFD, POD), starting at (0, 0) and ending at (1, 1).
    pub points: Vec<(f64, f64)>,
    /// Decision threshold of each point (forecast "yes" when prob >= it).
    pub thresholds: Vec<f64>,
}

const EPS: f64 = 1e-9;

fn sweep(probs: &[f64], thresholds: Thresholds) -> Vec<f64> {
    let mut t: Vec<f64> = match thresholds {
        Thresholds::Ensemble(m) => {
            let m = m.max(1);
            let mut t: Vec<f64> = (0..=m).map(|k| k as f64 / m as f64).collect();
            t.push(1.0 + 1.0 / m as f64);
            t
        }
        Thresholds::Distinct => {
            let mut t = probs.to_vec();
            t.sort_by(f64::total_cmp);
            t.dedup();
            let top = t.last().copied().unwrap_or(0.0);
            t.push(top + 1.0);
            t
        }
    };
    t.reverse();
    t
}

/// POD and POFD at each decision threshold, ordered from the strictest
/// threshold so both coordinates are nondecreasing.
pub fn roc_curve(probs: &[f64], outcomes: &[bool], thresholds: Thresholds) -> Result<RocCurve> {
    if probs.len() != outcomes.len() {
        return Err(Error::Format(format!("{} probabilities but {} outcomes", probs.len(), outcomes.len())));
    }
    if probs.is_empty() {
        return Err(Error::EmptyInput("no forecasts for the ROC curve"));
    }
    let events = outcomes.iter().filter(|&&o| o).count();
    let nonevents = outcomes.len() - events;
    if events == 0 || nonevents == 0 {
        return Err(Error::DegenerateOutcomes);
    }
    let ts = sweep(probs, thresholds);
    let mut points = Vec::with_capacity(ts.len() + 2);
    for &t in &ts {
        let (mut hits, mut fa) = (0usize, 0usize);
        for (p, &o) in probs.iter().zip(outcomes) {
            if *p >= t - EPS {
                if o {
                    hits += 1;
                } else {
                    fa += 1;
                }
            }
        }
        points.push((fa as f64 / nonevents as f64, hits as f64 / events as f64));
    }
    Ok(finish(points, ts))
}

/// Ensures the curve is anchored at both corners.
fn finish(mut points: Vec<(f64, f64)>, mut thresholds: Vec<f64>) -> RocCurve {
    if points.first() != Some(&(0.0, 0.0)) {
        points.insert(0, (0.0, 0.0));
        thresholds.insert(0, f64::INFINITY);
    }
    if points.last() != Some(&(1.0, 1.0)) {
        points.push((1.0, 1.0));
        thresholds.push(f64::NEG_INFINITY);
    }
    RocCurve { points, thresholds }
}

/// Trapezoidal area under the curve.
pub fn roca(curve: &RocCurve) -> f64 {
    curve.points.windows(2).map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0).sum()
}

/// ROC area skill score `2 (ROCA - 0.5)`.
pub fn rocass(roca_value: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&roca_value) {
        return Err(Error::OutOfRange(roca_value));
    }
    Ok(2.0 * (roca_value - 0.5))
}

/// Event and non-event counts by number of members forecasting the event,
/// for pooling across grid points, initializations, and shards. Merging
/// tallies is associative.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RocTally {
    pub members: usize,
    pub events: Vec<u64>,
    pub nonevents: Vec<u64>,
}

impl RocTally {
    pub fn new(members: usize) -> Self {
        Self { members, events: vec![0; members + 1], nonevents: vec![0; members + 1] }
    }

    /// Records one forecast with `yes_members` of `members` predicting the
    /// event.
    pub fn add(&mut self, yes_members: usize, outcome: bool) {
        let k = yes_members.min(self.members);
        if outcome {
            self.events[k] += 1;
        } else {
            self.nonevents[k] += 1;
        }
    }

    pub fn merge(&mut self, other: &RocTally) -> Result<()> {
        if other.members != self.members {
            return Err(Error::Config(format!("cannot pool {}- and {}-member tallies", self.members, other.members)));
        }
        for k in 0..=self.members {
            self.events[k] += other.events[k];
            self.nonevents[k] += other.nonevents[k];
        }
        Ok(())
    }

    pub fn n_events(&self) -> u64 {
        self.events.iter().sum()
    }

    pub fn n_total(&self) -> u64 {
        self.n_events() + self.nonevents.iter().sum::<u64>()
    }

    /// Curve over the M+2 ensemble thresholds, from exact integer counts.
    pub fn curve(&self) -> Result<RocCurve> {
        let (e, ne) = (self.n_events(), self.n_total() - self.n_events());
        if e == 0 || ne == 0 {
            return Err(Error::DegenerateOutcomes);
        }
        let m = self.members;
        let mut points = Vec::with_capacity(m + 2);
        let mut thresholds = Vec::with_capacity(m + 2);
        points.push((0.0, 0.0));
        thresholds.push(1.0 + 1.0 / m.max(1) as f64);
        let (mut hits, mut fa) = (0u64, 0u64);
        for k in (0..=m).rev() {
            hits += self.events[k];
            fa += self.nonevents[k];
            points.push((fa as f64 / ne as f64, hits as f64 / e as f64));
            thresholds.push(k as f64 / m.max(1) as f64);
        }
        Ok(finish(points, thresholds))
    }
}
