//! Member and ensemble tracking loops.

use chrono::Duration;

use super::config::TrackerConfig;
use super::steps::{constrain_displacement, find_candidates, first_guess, validate_candidate};
use super::track::{EnsembleTrackSet, MemberId, PhaseSchedule, Track, TrackPoint};
use crate::error::{Error, Result};
use crate::grid::{haversine_km, neighborhood_extreme, ExtremeMode, Field, FieldSet, GeoPoint, Level, Variable};
use crate::par;

/// One member's forecast: time-ordered field sets starting at the seed time.
#[derive(Debug, Clone)]
pub struct MemberRun {
    pub member: u32,
    pub steps: Vec<FieldSet>,
}

/// Shared inputs of a tracking job.
#[derive(Debug, Clone, Copy)]
pub struct TrackingContext<'a> {
    pub storm_id: &'a str,
    pub seed: &'a TrackPoint,
    pub cfg: &'a TrackerConfig,
    pub land_mask: Option<&'a Field>,
    pub phases: &'a PhaseSchedule,
}

/// Intensity attributes of a center from the criteria-radius neighborhood.
fn measure(fields: &FieldSet, center: GeoPoint, cfg: &TrackerConfig) -> Result<(f64, f64)> {
    let msl = fields.get(Variable::Msl, Level::Surface)?;
    let min_msl = neighborhood_extreme(msl, center, cfg.criteria_radius_km, ExtremeMode::Min)?.value;
    let ws = fields.wind_speed(Level::Surface)?;
    let max_ws = neighborhood_extreme(&ws, center, cfg.criteria_radius_km, ExtremeMode::Max)?.value;
    Ok((min_msl, max_ws))
}

fn check_time_axis(steps: &[FieldSet], ctx: &TrackingContext<'_>) -> Result<()> {
    let first = steps.first().ok_or(Error::EmptyInput("member run has no time steps"))?;
    if first.valid_time != ctx.seed.valid_time {
        return Err(Error::TimeMisalignment(format!(
            "run starts at {} but the seed is valid at {}",
            first.valid_time.to_rfc3339(),
            ctx.seed.valid_time.to_rfc3339()
        )));
    }
    let step = Duration::seconds(ctx.cfg.step_seconds().round() as i64);
    for w in steps.windows(2) {
        if w[1].valid_time - w[0].valid_time != step {
            return Err(Error::TimeMisalignment(format!(
                "step from {} to {} is not {} h",
                w[0].valid_time.to_rfc3339(),
                w[1].valid_time.to_rfc3339(),
                ctx.cfg.step_hours
            )));
        }
    }
    Ok(())
}

/// Tracks one member from the observed seed until no candidate passes the
/// criteria or the run ends. The returned track starts with the seed
/// position (intensity measured from the initial fields).
pub fn track_member(steps: &[FieldSet], member: MemberId, ctx: &TrackingContext<'_>) -> Result<Track> {
    let cfg = ctx.cfg;
    cfg.validate()?;
    check_time_axis(steps, ctx)?;
    let seed = ctx.seed.center;
    let spec = steps[0].spec().ok_or(Error::EmptyInput("initial field set is empty"))?;
    if !spec.contains(seed) {
        return Err(Error::SeedOutsideDomain { lat: seed.lat, lon: seed.lon });
    }

    let mut track = Track::new(ctx.storm_id, member);
    let (min_msl, max_ws10m) = measure(&steps[0], seed, cfg).unwrap_or((ctx.seed.min_msl, ctx.seed.max_ws10m));
    track.points.push(TrackPoint { min_msl, max_ws10m, phase: ctx.phases.at(ctx.seed.valid_time), ..*ctx.seed });

    let mut prev_disp = 0.0;
    for k in 1..steps.len() {
        let fields = &steps[k];
        let n = track.points.len();
        let history = &track.points[n.saturating_sub(2)..];
        let guess = first_guess(history, &steps[k - 1], cfg)?;
        let phase = ctx.phases.at(fields.valid_time);

        let mut chosen = None;
        for c in find_candidates(fields, guess.point, cfg)? {
            if validate_candidate(c.point, fields, ctx.land_mask, phase, cfg)?.accepted {
                chosen = Some(c.point);
                break;
            }
        }
        let Some(proposed) = chosen else { break };

        let from = track.points[n - 1].center;
        let center = constrain_displacement(prev_disp, proposed, from, guess.advection_km, cfg);
        let (min_msl, max_ws10m) = measure(fields, center, cfg)?;
        prev_disp = haversine_km(from, center);
        track.points.push(TrackPoint { valid_time: fields.valid_time, center, min_msl, max_ws10m, phase });
    }
    Ok(track)
}

/// Tracks each member run independently (in parallel when enabled),
/// returning one result per member in input order.
pub fn track_members(runs: &[MemberRun], ctx: &TrackingContext<'_>) -> Vec<Result<Track>> {
    par::map(runs, |run| {
        track_member(&run.steps, MemberId::Member(run.member), ctx)
            .map_err(|e| Error::Member { member: run.member, source: Box::new(e) })
    })
}

/// Tracks all members and forms the ensemble mean. Fails on the first
/// member error, tagged with its member id.
pub fn track_ensemble(runs: &[MemberRun], ctx: &TrackingContext<'_>) -> Result<EnsembleTrackSet> {
    if runs.is_empty() {
        return Err(Error::EmptyInput("no member runs"));
    }
    let members = track_members(runs, ctx).into_iter().collect::<Result<Vec<_>>>()?;
    EnsembleTrackSet::from_members(ctx.storm_id, ctx.seed.valid_time, members)
}
