//! Parallel core against a one-thread pool on the hot paths.

use std::hint::black_box;

use chrono::{TimeZone, Utc};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tcens::energy::{ensemble_mte, perturbations, MteParams, MTE_VARIABLES};
use tcens::grid::{relative_vorticity, GeoPoint, GridSpec, Level, Variable};
use tcens::par;
use tcens::synth::{
    advect_truth, ensemble_fields, gen_ensemble, replicate_spread, EnsembleNoiseSpec, Motion, TruthScenario, VortexSpec,
};
use tcens::tracker::{track_ensemble, PhaseSchedule, TrackerConfig, TrackingContext};
use tcens::verify::strike_probability;

const MODES: [(&str, usize); 2] = [("parallel", 0), ("sequential", 1)];

fn run<R: Send>(threads: usize, op: impl FnOnce() -> R + Send) -> R {
    if threads == 0 {
        op()
    } else {
        par::with_threads(threads, op)
    }
}

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

fn benches(c: &mut Criterion) {
    let t0 = Utc.with_ymd_and_hms(2018, 9, 1, 0, 0, 0).unwrap();
    let s = scenario(8);
    let truth = advect_truth(&s, &grid(), t0, "SYN").unwrap();
    let noise = EnsembleNoiseSpec { sigma_growth_km: 20.0, intensity_sigma_pa: 100.0, seed: 3 };
    let set = gen_ensemble(&truth.track, &noise, 16).unwrap();
    let runs = ensemble_fields(&s.vortex, &set, &grid(), s.steps + 1, s.step_hours).unwrap();
    let (cfg, phases) = (TrackerConfig::default(), PhaseSchedule::default());
    let ctx =
        TrackingContext { storm_id: "SYN", seed: &truth.track.points[0], cfg: &cfg, land_mask: None, phases: &phases };
    let strike_grid = GridSpec::new(5.0, 120.0, 0.1, 0.1, 301, 351, false).unwrap();
    let at0: Vec<_> = runs.iter().map(|r| r.steps[4].clone()).collect();
    let u = at0[0].get(Variable::U, Level::Hpa(850)).unwrap();
    let v = at0[0].get(Variable::V, Level::Hpa(850)).unwrap();
    let params = MteParams::default();

    let mut g = c.benchmark_group("core");
    g.sample_size(10);
    for (name, threads) in MODES {
        g.bench_with_input(BenchmarkId::new("track_ensemble_16", name), &threads, |b, &n| {
            b.iter(|| run(n, || track_ensemble(black_box(&runs), &ctx).unwrap()))
        });
        g.bench_with_input(BenchmarkId::new("strike_probability", name), &threads, |b, &n| {
            b.iter(|| run(n, || strike_probability(black_box(&set), &strike_grid, 111.0).unwrap()))
        });
        g.bench_with_input(BenchmarkId::new("replicate_spread_200", name), &threads, |b, &n| {
            b.iter(|| run(n, || replicate_spread(black_box(&truth.track), &noise, 48, 200, 8).unwrap()))
        });
        g.bench_with_input(BenchmarkId::new("vorticity", name), &threads, |b, &n| {
            b.iter(|| run(n, || relative_vorticity(black_box(u), v).unwrap()))
        });
        g.bench_with_input(BenchmarkId::new("ensemble_mte_16", name), &threads, |b, &n| {
            b.iter(|| {
                run(n, || {
                    let p = perturbations(black_box(&at0), Level::Hpa(850), &MTE_VARIABLES).unwrap();
                    ensemble_mte(&p, &params).unwrap()
                })
            })
        });
    }
    g.finish();
}

criterion_group!(parallel, benches);
criterion_main!(parallel);
