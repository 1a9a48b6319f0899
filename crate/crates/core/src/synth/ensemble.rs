//! Stochastic ensembles around a truth track.
//!
//! Member `m` draws one standard-normal direction `z_m` in the local
//! tangent plane; its offset at step `s` is `s * growth * z_m / sqrt(2)`
//! per axis, so `growth * s` is the RMS radial offset at that step. The
//! expected squared spread about the ensemble mean is then
//! `(growth * s)^2 (1 - 1/M)`.

use chrono::Duration;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::truth::Motion;
use super::vortex::{gen_vortex_field, gen_vortex_field_opt, VortexSpec};
use crate::error::{Error, Result};
use crate::grid::{azimuth_deg, haversine_km, offset_en, FieldSet, GridSpec};
use crate::par;
use crate::tracker::{EnsembleTrackSet, MemberId, MemberRun, Track, TrackPoint};
use crate::verify::{spread_tc, SpreadCase};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleNoiseSpec {
    /// RMS radial position offset added per step, km.
    pub sigma_growth_km: f64,
    /// Standard deviation of the central-pressure perturbation, Pa.
    pub intensity_sigma_pa: f64,
    pub seed: u64,
}

impl EnsembleNoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_growth_km >= 0.0) || !(self.intensity_sigma_pa >= 0.0) {
            return Err(Error::Config("noise sigmas must be nonnegative".into()));
        }
        Ok(())
    }

    /// RMS radial offset at step `s`.
    pub fn sigma_at(&self, s: usize) -> f64 {
        self.sigma_growth_km * s as f64
    }
}

/// Independent seed for replication `rep` (splitmix64 finalizer).
pub fn derive_seed(seed: u64, rep: u64) -> u64 {
    let mut z = seed ^ rep.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn member_rng(seed: u64, member: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(member as u64);
    rng
}

/// Members displaced from `truth` by Gaussian offsets; step 0 is shared.
pub fn gen_ensemble(truth: &Track, noise: &EnsembleNoiseSpec, m: usize) -> Result<EnsembleTrackSet> {
    noise.validate()?;
    if m < 2 {
        return Err(Error::TooFewMembers { needed: 2, got: m });
    }
    let init = truth.first_time().ok_or(Error::EmptyInput("truth track has no points"))?;
    let members = (0..m as u32)
        .map(|id| {
            let mut rng = member_rng(noise.seed, id);
            let ze: f64 = StandardNormal.sample(&mut rng);
            let zn: f64 = StandardNormal.sample(&mut rng);
            let zp: f64 = StandardNormal.sample(&mut rng);
            let points = truth
                .points
                .iter()
                .enumerate()
                .map(|(s, p)| {
                    let sd = noise.sigma_at(s) / std::f64::consts::SQRT_2;
                    let dp = noise.intensity_sigma_pa * zp * (s > 0) as u8 as f64;
                    TrackPoint {
                        center: offset_en(p.center, sd * ze, sd * zn),
                        min_msl: (p.min_msl + dp).clamp(85000.5, 107999.5),
                        ..*p
                    }
                })
                .collect();
            Track { storm_id: truth.storm_id.clone(), member: MemberId::Member(id), points }
        })
        .collect();
    EnsembleTrackSet::from_members(truth.storm_id.clone(), init, members)
}

/// Field sets for one member track: the `template` vortex placed at each
/// member position, steered by the member's own motion. Times past the end
/// of the track get flat fields.
pub fn member_fields(
    template: &VortexSpec,
    member: &Track,
    spec: &GridSpec,
    n_times: usize,
    step_hours: i64,
) -> Result<Vec<FieldSet>> {
    let init = member.first_time().ok_or(Error::EmptyInput("member track has no points"))?;
    let pts = &member.points;
    (0..n_times)
        .map(|k| {
            let t = init + Duration::hours(k as i64 * step_hours);
            // motion over the step leaving k, or entering k at the end
            let (a, b) = match (pts.get(k), pts.get(k + 1)) {
                (Some(a), Some(b)) => (a.center, b.center),
                (Some(a), None) if k > 0 => (pts[k - 1].center, a.center),
                _ => (template.center, template.center),
            };
            let dist = haversine_km(a, b);
            let steer = match azimuth_deg(a, b) {
                Ok(h) if dist > 0.0 => Motion::steering(h, dist * 1000.0 / (step_hours * 3600) as f64),
                _ => Default::default(),
            };
            match pts.get(k) {
                Some(p) => {
                    let v = VortexSpec {
                        center: p.center,
                        central_pressure: p.min_msl.min(template.ambient_pressure),
                        ..*template
                    };
                    gen_vortex_field(&v, spec, t, steer)
                }
                None => gen_vortex_field_opt(None, template.ambient_pressure, spec, t, steer),
            }
        })
        .collect()
}

/// Field runs for every member, in parallel.
pub fn ensemble_fields(
    template: &VortexSpec,
    set: &EnsembleTrackSet,
    spec: &GridSpec,
    n_times: usize,
    step_hours: i64,
) -> Result<Vec<MemberRun>> {
    par::map(&set.members, |t| {
        let MemberId::Member(member) = t.member else { unreachable!("synthetic members are numbered") };
        member_fields(template, t, spec, n_times, step_hours).map(|steps| MemberRun { member, steps })
    })
    .into_iter()
    .collect()
}

/// Spread at step `lead_step` for each of `reps` independently seeded
/// ensembles.
pub fn replicate_spread(
    truth: &Track,
    noise: &EnsembleNoiseSpec,
    m: usize,
    reps: usize,
    lead_step: usize,
) -> Result<Vec<f64>> {
    let t = truth.points.get(lead_step).ok_or(Error::EmptyInput("lead step beyond the truth track"))?.valid_time;
    par::map_range(reps, |r| {
        let n = EnsembleNoiseSpec { seed: derive_seed(noise.seed, r as u64), ..*noise };
        let set = gen_ensemble(truth, &n, m)?;
        let case = SpreadCase::from_set(&set, t).ok_or(Error::EmptyInput("no members at lead"))?;
        spread_tc(&[case])
    })
    .into_iter()
    .collect()
}

/// `E[chi_k]` for `k` degrees of freedom.
pub fn chi_mean(k: f64) -> f64 {
    std::f64::consts::SQRT_2 * (ln_gamma((k + 1.0) / 2.0) - ln_gamma(k / 2.0)).exp()
}

/// Expected single-ensemble spread for RMS radial offset `sigma` and `m`
/// members: the member scatter about the sample mean is
/// `(sigma^2 / 2) chi^2` with `2 (m - 1)` degrees of freedom.
pub fn expected_spread(sigma: f64, m: usize) -> f64 {
    sigma / std::f64::consts::SQRT_2 / (m as f64).sqrt() * chi_mean(2.0 * (m as f64 - 1.0))
}

/// Limit of the case-pooled RMS spread: `sigma * sqrt(1 - 1/m)`.
pub fn expected_rms_spread(sigma: f64, m: usize) -> f64 {
    sigma * (1.0 - 1.0 / m as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GeoPoint;
    use crate::tracker::Phase;
    use crate::verify::error_tc;
    use chrono::{TimeZone, Utc};

    fn truth(n: usize) -> Track {
        let t0 = Utc.with_ymd_and_hms(2018, 9, 1, 0, 0, 0).unwrap();
        Track {
            storm_id: "S".into(),
            member: MemberId::Obs,
            points: (0..n)
                .map(|k| TrackPoint {
                    valid_time: t0 + Duration::hours(6 * k as i64),
                    center: GeoPoint::new(15.0 + 0.5 * k as f64, 140.0 - 0.5 * k as f64),
                    min_msl: 96000.0,
                    max_ws10m: 40.0,
                    phase: Phase::Tropical,
                })
                .collect(),
        }
    }

    #[test]
    fn zero_noise_reproduces_truth() {
        let tr = truth(5);
        let noise = EnsembleNoiseSpec { sigma_growth_km: 0.0, intensity_sigma_pa: 0.0, seed: 1 };
        let set = gen_ensemble(&tr, &noise, 10).unwrap();
        for t in set.members.iter().chain([&set.mean_track]) {
            for (a, b) in t.points.iter().zip(&tr.points) {
                assert!(haversine_km(a.center, b.center) < 1e-9);
            }
        }
        let t = tr.points[3].valid_time;
        let case = SpreadCase::from_set(&set, t).unwrap();
        assert!(spread_tc(std::slice::from_ref(&case)).unwrap() < 1e-9);
        assert!(error_tc(&[(case.mean, tr.points[3].center)]).unwrap() < 1e-9);
    }

    #[test]
    fn seeded_determinism() {
        let tr = truth(6);
        let noise = EnsembleNoiseSpec { sigma_growth_km: 30.0, intensity_sigma_pa: 200.0, seed: 7 };
        let a = gen_ensemble(&tr, &noise, 12).unwrap();
        let b = gen_ensemble(&tr, &noise, 12).unwrap();
        assert_eq!(a, b);
        let c = gen_ensemble(&tr, &EnsembleNoiseSpec { seed: 8, ..noise }, 12).unwrap();
        assert_ne!(a, c);
        assert!(gen_ensemble(&tr, &noise, 1).is_err());
    }

    #[test]
    fn offsets_grow_linearly() {
        let tr = truth(6);
        let noise = EnsembleNoiseSpec { sigma_growth_km: 30.0, intensity_sigma_pa: 0.0, seed: 3 };
        let set = gen_ensemble(&tr, &noise, 4).unwrap();
        for m in &set.members {
            let d1 = haversine_km(m.points[1].center, tr.points[1].center);
            let d4 = haversine_km(m.points[4].center, tr.points[4].center);
            assert!((d4 - 4.0 * d1).abs() < 1e-6 * d4.max(1.0));
        }
    }

    #[test]
    fn chi_mean_reference_values() {
        // E[chi_1] = sqrt(2/pi), E[chi_2] = sqrt(pi/2)
        assert!((chi_mean(1.0) - (2.0 / std::f64::consts::PI).sqrt()).abs() < 1e-12);
        assert!((chi_mean(2.0) - (std::f64::consts::PI / 2.0).sqrt()).abs() < 1e-12);
        // large-k expectation approaches the RMS value from below
        let (e, r) = (expected_spread(50.0, 48), expected_rms_spread(50.0, 48));
        assert!(e < r && (r - e) / r < 0.01);
    }

    #[test]
    fn replications_match_expectation() {
        let tr = truth(3);
        let noise = EnsembleNoiseSpec { sigma_growth_km: 50.0, intensity_sigma_pa: 0.0, seed: 11 };
        let s = replicate_spread(&tr, &noise, 10, 400, 1).unwrap();
        let mean = s.iter().sum::<f64>() / s.len() as f64;
        let e = expected_spread(50.0, 10);
        assert!((mean - e).abs() / e < 0.05, "{mean} vs {e}");
    }
}
