use std::time::Instant;

use chrono::{DateTime, TimeZone, Utc};
use tcens::grid::{haversine_km, Field, GeoPoint, GridSpec, Level, Variable};
use tcens::synth::{
    advect_truth, ensemble_fields, gen_ensemble, gen_vortex_field, EnsembleNoiseSpec, Motion, Steering, TruthScenario,
    VortexSpec,
};
use tcens::tracker::{
    find_candidates, first_guess, track_ensemble, track_member, validate_candidate, MemberId, MemberRun, Phase,
    PhaseSchedule, RejectReason, Track, TrackerConfig, TrackingContext,
};

const CELL_KM: f64 = 0.25 * 111.195;

fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2018, 9, 1, 0, 0, 0).unwrap()
}

/// 0.25 degree regional grid, 8..30.5 N by 122..150.75 E.
fn grid() -> GridSpec {
    GridSpec::new(8.0, 122.0, 0.25, 0.25, 91, 116, false).unwrap()
}

fn scenario(steps: usize) -> TruthScenario {
    TruthScenario {
        vortex: VortexSpec::standard(GeoPoint::new(14.0, 146.0)),
        motion: Motion { bearing_deg: 300.0, speed_ms: 5.0 },
        steps,
        step_hours: 6,
        dissipate_after: None,
    }
}

fn run_track(steps: &[tcens::grid::FieldSet], truth: &Track, cfg: &TrackerConfig) -> Track {
    let phases = PhaseSchedule::default();
    let ctx = TrackingContext { storm_id: "SYN", seed: &truth.points[0], cfg, land_mask: None, phases: &phases };
    track_member(steps, MemberId::Member(0), &ctx).unwrap()
}

fn mean_error(a: &Track, b: &Track) -> f64 {
    let d: Vec<f64> = a.points.iter().zip(&b.points).map(|(x, y)| haversine_km(x.center, y.center)).collect();
    d.iter().sum::<f64>() / d.len() as f64
}

#[test]
fn straight_line_track_is_recovered() {
    let start = Instant::now();
    let truth = advect_truth(&scenario(20), &grid(), t0(), "SYN").unwrap();
    let cfg = TrackerConfig::default();
    let track = run_track(&truth.fields, &truth.track, &cfg);
    assert_eq!(track.points.len(), truth.track.points.len());
    assert!(mean_error(&track, &truth.track) <= CELL_KM, "mean error {}", mean_error(&track, &truth.track));
    for (a, b) in track.points.iter().zip(&truth.track.points) {
        assert!(haversine_km(a.center, b.center) <= CELL_KM, "{:?} vs {:?}", a.center, b.center);
        assert_eq!(a.valid_time, b.valid_time);
    }
    assert!(start.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn tracking_is_deterministic() {
    let truth = advect_truth(&scenario(6), &grid(), t0(), "SYN").unwrap();
    let cfg = TrackerConfig::default();
    assert_eq!(run_track(&truth.fields, &truth.track, &cfg), run_track(&truth.fields, &truth.track, &cfg));
}

#[test]
fn displacements_respect_the_cap() {
    let truth = advect_truth(&scenario(12), &grid(), t0(), "SYN").unwrap();
    let cfg = TrackerConfig::default();
    let track = run_track(&truth.fields, &truth.track, &cfg);
    let d: Vec<f64> = track.points.windows(2).map(|w| haversine_km(w[0].center, w[1].center)).collect();
    for w in d.windows(2) {
        if w[0] > 0.0 {
            assert!(w[1] <= cfg.max_displacement_factor * w[0] + 1e-6);
        }
    }
}

#[test]
fn stops_when_the_vortex_dissipates() {
    for k in [1, 4, 8] {
        let mut s = scenario(12);
        s.dissipate_after = Some(k);
        let truth = advect_truth(&s, &grid(), t0(), "SYN").unwrap();
        let track = run_track(&truth.fields, &truth.track, &TrackerConfig::default());
        assert_eq!(track.points.len() - 1, k);
    }
}

#[test]
fn flat_fields_terminate_immediately() {
    let mut s = scenario(4);
    s.dissipate_after = Some(0);
    let truth = advect_truth(&s, &grid(), t0(), "SYN").unwrap();
    let mut flat = truth.fields.clone();
    let calm = tcens::synth::gen_vortex_field_opt(None, 101000.0, &grid(), t0(), Steering::default()).unwrap();
    flat[0] = calm;
    let track = run_track(&flat, &truth.track, &TrackerConfig::default());
    assert_eq!(track.points.len(), 1);
}

#[test]
fn candidates_within_search_radius_only() {
    let g = grid();
    let guess = GeoPoint::new(18.0, 135.0);
    let cfg = TrackerConfig::default();
    for (dist, expect) in [(200.0, 1usize), (600.0, 0)] {
        let center = tcens::grid::destination(guess, 70.0, dist);
        let fs = gen_vortex_field(&VortexSpec::standard(center), &g, t0(), Steering::default()).unwrap();
        let c = find_candidates(&fs, guess, &cfg).unwrap();
        assert_eq!(c.len(), expect, "vortex {dist} km from the guess");
        for cand in &c {
            assert!(haversine_km(cand.point, center) <= CELL_KM);
            assert!(haversine_km(cand.point, guess) <= cfg.search_radius_km);
        }
    }
}

#[test]
fn two_vortices_give_two_minima() {
    let g = grid();
    let a = GeoPoint::new(16.0, 132.0);
    let b = GeoPoint::new(20.0, 138.0);
    let fa = gen_vortex_field(&VortexSpec::standard(a), &g, t0(), Steering::default()).unwrap();
    let fb = gen_vortex_field(&VortexSpec::standard(b), &g, t0(), Steering::default()).unwrap();
    let (ma, mb) = (fa.get(Variable::Msl, Level::Surface).unwrap(), fb.get(Variable::Msl, Level::Surface).unwrap());
    let both = Field::new(
        g,
        ma.values.iter().zip(&mb.values).map(|(x, y)| x + y - 101000.0).collect(),
        Variable::Msl,
        Level::Surface,
        t0(),
    )
    .unwrap();
    let mins = tcens::grid::local_extrema(&both, GeoPoint::new(18.0, 135.0), 800.0, tcens::grid::ExtremeMode::Min);
    assert_eq!(mins.len(), 2);
    let near = |p: GeoPoint| mins.iter().any(|m| haversine_km(m.point, p) <= CELL_KM);
    assert!(near(a) && near(b));
    let single = tcens::grid::local_extrema(ma, a, 800.0, tcens::grid::ExtremeMode::Min);
    assert_eq!(single.len(), 1);
}

/// Measured peak of a validation quantity for a vortex of `peak_wind`.
fn vortex_with(peak_wind: f64) -> (tcens::grid::FieldSet, GeoPoint) {
    let c = GeoPoint::new(18.0, 135.0);
    let v = VortexSpec { peak_wind, ..VortexSpec::standard(c) };
    (gen_vortex_field(&v, &grid(), t0(), Steering::default()).unwrap(), c)
}

#[test]
fn vorticity_threshold_bracketing() {
    let cfg = TrackerConfig::default();
    // core vorticity 3e-4 passes
    let pw = VortexSpec::peak_wind_for_core_vorticity(3e-4, 50.0, 1.0);
    let (fs, c) = vortex_with(pw);
    let v = validate_candidate(c, &fs, None, Phase::Tropical, &cfg).unwrap();
    assert!(v.accepted);

    // the gridded peak scales linearly with the wind amplitude
    let per_unit = v.peak_vorticity / pw;
    for (scale, accepted) in [(0.99, false), (1.01, true)] {
        let (fs, c) = vortex_with(scale * cfg.vort_threshold / per_unit);
        let v = validate_candidate(c, &fs, None, Phase::Tropical, &cfg).unwrap();
        assert_eq!(v.accepted, accepted, "peak {}", v.peak_vorticity);
        if !accepted {
            assert_eq!(v.reason, Some(RejectReason::Vorticity));
        }
    }
}

#[test]
fn land_wind_threshold_bracketing() {
    let cfg = TrackerConfig::default();
    let land = Field::constant(grid(), 1.0, Variable::Lsm, Level::Surface, t0()).unwrap();
    let (fs, c) = vortex_with(10.0);
    let v = validate_candidate(c, &fs, Some(&land), Phase::Tropical, &cfg).unwrap();
    let per_unit = v.peak_wind.unwrap() / 10.0;
    for (scale, accepted) in [(0.99, false), (1.01, true)] {
        let (fs, c) = vortex_with(scale * cfg.wind10m_threshold / per_unit);
        let v = validate_candidate(c, &fs, Some(&land), Phase::Tropical, &cfg).unwrap();
        assert_eq!(v.accepted, accepted, "peak wind {:?}", v.peak_wind);
        if !accepted {
            assert_eq!(v.reason, Some(RejectReason::Wind));
        }
    }
    // 6 m/s over land fails on wind
    let (fs, c) = vortex_with(6.0 / per_unit);
    assert_eq!(
        validate_candidate(c, &fs, Some(&land), Phase::Tropical, &cfg).unwrap().reason,
        Some(RejectReason::Wind)
    );
    // the same weak vortex over ocean passes
    assert!(validate_candidate(c, &fs, None, Phase::Tropical, &cfg).unwrap().accepted);
}

#[test]
fn lowering_the_threshold_never_rejects() {
    let (fs, c) = vortex_with(3.0);
    let mut cfg = TrackerConfig::default();
    let mut was = false;
    for k in (1..=40).rev() {
        cfg.vort_threshold = k as f64 * 5e-6;
        let ok = validate_candidate(c, &fs, None, Phase::Tropical, &cfg).unwrap().accepted;
        assert!(ok || !was);
        was = ok;
    }
    assert!(was);
}

#[test]
fn first_guess_follows_the_steering_flow() {
    let truth = advect_truth(&scenario(3), &grid(), t0(), "SYN").unwrap();
    let cfg = TrackerConfig::default();
    let g = first_guess(&truth.track.points[..1], &truth.fields[0], &cfg).unwrap();
    assert!(haversine_km(g.point, truth.track.points[1].center) < 2.0);
    let g2 = first_guess(&truth.track.points[..2], &truth.fields[1], &cfg).unwrap();
    assert!(haversine_km(g2.point, truth.track.points[2].center) < 2.0);
}

fn ensemble_runs(sigma: f64, m: usize, steps: usize) -> (Track, Vec<MemberRun>) {
    let s = scenario(steps);
    let truth = advect_truth(&s, &grid(), t0(), "SYN").unwrap();
    let noise = EnsembleNoiseSpec { sigma_growth_km: sigma, intensity_sigma_pa: 0.0, seed: 5 };
    let set = gen_ensemble(&truth.track, &noise, m).unwrap();
    let runs = ensemble_fields(&s.vortex, &set, &grid(), steps + 1, 6).unwrap();
    (truth.track, runs)
}

fn ctx_track<'a>(truth: &'a Track, cfg: &'a TrackerConfig, phases: &'a PhaseSchedule) -> TrackingContext<'a> {
    TrackingContext { storm_id: "SYN", seed: &truth.points[0], cfg, land_mask: None, phases }
}

#[test]
fn identical_members_match_their_mean() {
    let truth = advect_truth(&scenario(6), &grid(), t0(), "SYN").unwrap();
    let runs: Vec<MemberRun> = (0..3).map(|m| MemberRun { member: m, steps: truth.fields.clone() }).collect();
    let (cfg, phases) = (TrackerConfig::default(), PhaseSchedule::default());
    let set = track_ensemble(&runs, &ctx_track(&truth.track, &cfg, &phases)).unwrap();
    for m in &set.members {
        assert_eq!(m.points, set.members[0].points);
        for (a, b) in m.points.iter().zip(&set.mean_track.points) {
            assert!(haversine_km(a.center, b.center) < 1e-6);
        }
    }
}

#[test]
fn symmetric_pair_centers_on_truth() {
    let s = scenario(6);
    let truth = advect_truth(&s, &grid(), t0(), "SYN").unwrap();
    let d = 60.0;
    // offsets perpendicular to the 300 degree heading
    let runs: Vec<MemberRun> = [30.0, 210.0]
        .iter()
        .enumerate()
        .map(|(m, &bearing)| {
            let mut tr = truth.track.clone();
            for p in tr.points.iter_mut().skip(1) {
                p.center = tcens::grid::destination(p.center, bearing, d);
            }
            let steps = tcens::synth::member_fields(&s.vortex, &tr, &grid(), 7, 6).unwrap();
            MemberRun { member: m as u32, steps }
        })
        .collect();
    let (cfg, phases) = (TrackerConfig::default(), PhaseSchedule::default());
    let set = track_ensemble(&runs, &ctx_track(&truth.track, &cfg, &phases)).unwrap();
    assert_eq!(set.mean_track.points.len(), truth.track.points.len());
    for (a, b) in set.mean_track.points.iter().zip(&truth.track.points) {
        assert!(haversine_km(a.center, b.center) <= CELL_KM);
    }
}

#[test]
fn forty_eight_member_ensemble() {
    let (truth, runs) = ensemble_runs(15.0, 48, 8);
    let (cfg, phases) = (TrackerConfig::default(), PhaseSchedule::default());
    let set = track_ensemble(&runs, &ctx_track(&truth, &cfg, &phases)).unwrap();
    assert_eq!(set.members.len(), 48);
    let t = truth.points[8].valid_time;
    let case = tcens::verify::SpreadCase::from_set(&set, t).unwrap();
    assert_eq!(case.members.len(), 48);
    assert!(tcens::verify::spread_tc(&[case]).unwrap() > 0.0);
}
