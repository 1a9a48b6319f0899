//! Moist turbulent energy of ensemble perturbations.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, FieldSet, Level, Variable};
use crate::par;

/// Variables entering the energy norm.
pub const MTE_VARIABLES: [Variable; 4] = [Variable::U, Variable::V, Variable::T, Variable::Q];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MteParams {
    /// Reference temperature, K.
    pub t_ref: f64,
    /// Specific heat of dry air at constant pressure, J/(kg K).
    pub c_p: f64,
    /// Latent heat of condensation, J/kg.
    pub latent_heat: f64,
    /// Weight of the moisture term.
    pub epsilon: f64,
}

impl Default for MteParams {
    fn default() -> Self {
        Self { t_ref: 270.0, c_p: 1005.7, latent_heat: 2.51e6, epsilon: 1.0 }
    }
}

impl MteParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_ref > 0.0 && self.c_p > 0.0 && self.latent_heat > 0.0) || !(self.epsilon >= 0.0) {
            return Err(Error::Config("MTE constants must be positive".into()));
        }
        Ok(())
    }

    pub fn thermal_coef(&self) -> f64 {
        self.c_p / self.t_ref
    }

    pub fn latent_coef(&self) -> f64 {
        self.epsilon * self.latent_heat * self.latent_heat / (self.c_p * self.t_ref)
    }

    /// Energy of one perturbation vector, J/kg.
    pub fn point(&self, u: f64, v: f64, t: f64, q: f64) -> f64 {
        0.5 * (u * u + v * v) + self.thermal_coef() * t * t + self.latent_coef() * q * q
    }
}

/// Deviations of one member from the ensemble mean at one level and time.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSet {
    pub member: usize,
    pub level: Level,
    pub valid_time: DateTime<Utc>,
    pub fields: BTreeMap<Variable, Field>,
}

impl PerturbationSet {
    pub fn get(&self, v: Variable) -> Result<&Field> {
        self.fields.get(&v).ok_or(Error::MissingVariable(v))
    }
}

/// Member-minus-mean fields of `variables` at `level`.
pub fn perturbations(members: &[FieldSet], level: Level, variables: &[Variable]) -> Result<Vec<PerturbationSet>> {
    if members.len() < 2 {
        return Err(Error::TooFewMembers { needed: 2, got: members.len() });
    }
    let time = members[0].valid_time;
    if members.iter().any(|m| m.valid_time != time) {
        return Err(Error::TimeMisalignment("members are valid at different times".into()));
    }
    let mut out: Vec<PerturbationSet> = (0..members.len())
        .map(|member| PerturbationSet { member, level, valid_time: time, fields: BTreeMap::new() })
        .collect();
    let m = members.len() as f64;
    for &var in variables {
        let fs: Vec<&Field> = members.iter().map(|s| s.get(var, level)).collect::<Result<_>>()?;
        for f in &fs[1..] {
            fs[0].ensure_compatible(f)?;
        }
        let n = fs[0].spec.len();
        let mean: Vec<f64> = par::map_range(n, |k| fs.iter().map(|f| f.values[k]).sum::<f64>() / m);
        for (set, f) in out.iter_mut().zip(&fs) {
            let values = f.values.iter().zip(&mean).map(|(x, mu)| x - mu).collect();
            let mut p = Field::new(f.spec, values, var, level, time)?;
            p.mask = f.mask.clone();
            set.fields.insert(var, p);
        }
    }
    Ok(out)
}

/// The three energy terms of one member, J/kg.
#[derive(Debug, Clone, PartialEq)]
pub struct MteTerms {
    pub kinetic: Field,
    pub thermal: Field,
    pub latent: Field,
}

pub fn mte_terms(p: &PerturbationSet, params: &MteParams) -> Result<MteTerms> {
    params.validate()?;
    let (u, v, t, q) = (p.get(Variable::U)?, p.get(Variable::V)?, p.get(Variable::T)?, p.get(Variable::Q)?);
    let kinetic: Vec<f64> = u.values.iter().zip(&v.values).map(|(a, b)| 0.5 * (a * a + b * b)).collect();
    let (ct, cq) = (params.thermal_coef(), params.latent_coef());
    let thermal: Vec<f64> = t.values.iter().map(|x| ct * x * x).collect();
    let latent: Vec<f64> = q.values.iter().map(|x| cq * x * x).collect();
    let mk = |vals| Field::new(u.spec, vals, Variable::Mte, p.level, p.valid_time);
    Ok(MteTerms { kinetic: mk(kinetic)?, thermal: mk(thermal)?, latent: mk(latent)? })
}

/// Per-member energy field.
pub fn mte(p: &PerturbationSet, params: &MteParams) -> Result<Field> {
    params.validate()?;
    let (u, v, t, q) = (p.get(Variable::U)?, p.get(Variable::V)?, p.get(Variable::T)?, p.get(Variable::Q)?);
    let n = u.spec.len();
    let values = par::map_range(n, |k| params.point(u.values[k], v.values[k], t.values[k], q.values[k]));
    Field::new(u.spec, values, Variable::Mte, p.level, p.valid_time)
}

/// Member-mean energy field.
pub fn ensemble_mte(sets: &[PerturbationSet], params: &MteParams) -> Result<Field> {
    let first = sets.first().ok_or(Error::TooFewMembers { needed: 2, got: 0 })?;
    let fields: Vec<Field> = par::map(sets, |p| mte(p, params)).into_iter().collect::<Result<_>>()?;
    let m = fields.len() as f64;
    let n = fields[0].values.len();
    let values = (0..n).map(|k| fields.iter().map(|f| f.values[k]).sum::<f64>() / m).collect();
    Field::new(fields[0].spec, values, Variable::Mte, first.level, first.valid_time)
}

/// Mean over unmasked points.
pub fn area_mean(f: &Field) -> f64 {
    let (mut s, mut n) = (0.0, 0usize);
    for (k, v) in f.values.iter().enumerate() {
        if !f.mask.as_ref().is_some_and(|m| m[k]) {
            s += v;
            n += 1;
        }
    }
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use chrono::TimeZone;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const L850: Level = Level::Hpa(850);

    fn t0() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2018, 9, 1, 0, 0, 0).unwrap()
    }

    fn grid() -> GridSpec {
        GridSpec::new(10.0, 120.0, 1.0, 1.0, 4, 5, false).unwrap()
    }

    fn member(u: &[f64], v: &[f64], t: &[f64], q: &[f64]) -> FieldSet {
        let g = grid();
        let mut fs = FieldSet::new(t0());
        for (var, vals) in [(Variable::U, u), (Variable::V, v), (Variable::T, t), (Variable::Q, q)] {
            fs.insert(Field::new(g, vals.to_vec(), var, L850, t0()).unwrap()).unwrap();
        }
        fs
    }

    fn random_members(m: usize, seed: u64) -> Vec<FieldSet> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = grid().len();
        let mut r = |s: f64, c: f64| -> Vec<f64> { (0..n).map(|_| c + s * rng.random_range(-1.0..1.0)).collect() };
        (0..m)
            .map(|_| {
                let (u, v, t, q) = (r(10.0, 3.0), r(10.0, -2.0), r(3.0, 288.0), r(2e-3, 0.012));
                member(&u, &v, &t, &q)
            })
            .collect()
    }

    fn single(u: f64, v: f64, t: f64, q: f64) -> PerturbationSet {
        let g = grid();
        let mut fields = BTreeMap::new();
        for (var, x) in [(Variable::U, u), (Variable::V, v), (Variable::T, t), (Variable::Q, q)] {
            fields.insert(var, Field::constant(g, x, var, L850, t0()).unwrap());
        }
        PerturbationSet { member: 0, level: L850, valid_time: t0(), fields }
    }

    #[test]
    fn constants() {
        let p = MteParams::default();
        assert_eq!(mte(&single(0.0, 0.0, 0.0, 0.0), &p).unwrap().values[0], 0.0);
        assert_eq!(mte(&single(1.0, 0.0, 0.0, 0.0), &p).unwrap().values[0], 0.5);
        assert!((mte(&single(0.0, 0.0, 1.0, 0.0), &p).unwrap().values[0] - 3.7248).abs() < 1e-3 * 3.7248);
        assert!((mte(&single(0.0, 0.0, 0.0, 1e-3), &p).unwrap().values[0] - 23.20).abs() < 1e-3 * 23.20);
        let dry = MteParams { epsilon: 0.0, ..p };
        assert_eq!(mte(&single(0.0, 0.0, 0.0, 1e-3), &dry).unwrap().values[0], 0.0);
    }

    #[test]
    fn identical_and_symmetric_members() {
        let n = grid().len();
        let a = member(&vec![3.0; n], &vec![1.0; n], &vec![280.0; n], &vec![0.01; n]);
        let ps = perturbations(&[a.clone(), a.clone(), a], L850, &MTE_VARIABLES).unwrap();
        assert!(ps.iter().all(|p| p.fields.values().all(|f| f.values.iter().all(|&x| x == 0.0))));

        let x: Vec<f64> = (0..n).map(|k| k as f64 * 0.5).collect();
        let nx: Vec<f64> = x.iter().map(|v| -v).collect();
        let z = vec![0.0; n];
        let ps = perturbations(&[member(&x, &z, &z, &z), member(&nx, &z, &z, &z)], L850, &MTE_VARIABLES).unwrap();
        assert_eq!(ps[0].get(Variable::U).unwrap().values, x);
        assert_eq!(ps[1].get(Variable::U).unwrap().values, nx);
    }

    #[test]
    fn perturbations_have_zero_mean() {
        let ms = random_members(5, 1);
        let ps = perturbations(&ms, L850, &MTE_VARIABLES).unwrap();
        for var in MTE_VARIABLES {
            let scale = ms[0].get(var, L850).unwrap().values.iter().fold(0.0_f64, |a, b| a.max(b.abs()));
            for k in 0..grid().len() {
                let s: f64 = ps.iter().map(|p| p.fields[&var].values[k]).sum::<f64>() / 5.0;
                assert!(s.abs() <= 1e-10 * scale, "{var} {s}");
            }
        }
    }

    #[test]
    fn too_few_members() {
        let ms = random_members(1, 2);
        assert!(matches!(perturbations(&ms, L850, &MTE_VARIABLES), Err(Error::TooFewMembers { .. })));
    }

    #[test]
    fn missing_variable() {
        let mut p = single(1.0, 1.0, 1.0, 1.0);
        p.fields.remove(&Variable::Q);
        assert!(matches!(mte(&p, &MteParams::default()), Err(Error::MissingVariable(Variable::Q))));
    }

    #[test]
    fn terms_add_up_and_scale() {
        let ms = random_members(4, 3);
        let ps = perturbations(&ms, L850, &MTE_VARIABLES).unwrap();
        let prm = MteParams::default();
        for p in &ps {
            let fused = mte(p, &prm).unwrap();
            let t = mte_terms(p, &prm).unwrap();
            for k in 0..fused.values.len() {
                let sum = t.kinetic.values[k] + t.thermal.values[k] + t.latent.values[k];
                assert!((sum - fused.values[k]).abs() <= 1e-12 * fused.values[k].abs().max(1e-300));
                assert!(fused.values[k] >= 0.0);
            }
            let mut doubled = p.clone();
            for var in [Variable::U, Variable::V] {
                let f = doubled.fields.get_mut(&var).unwrap();
                f.values.iter_mut().for_each(|x| *x *= 2.0);
            }
            let t2 = mte_terms(&doubled, &prm).unwrap();
            for k in 0..fused.values.len() {
                assert_eq!(t2.kinetic.values[k], 4.0 * t.kinetic.values[k]);
            }
        }
    }

    #[test]
    fn common_temperature_offset_cancels() {
        let ms = random_members(3, 4);
        let shifted: Vec<FieldSet> = ms
            .iter()
            .map(|m| {
                let mut out = m.clone();
                let t = m.get(Variable::T, L850).unwrap().map_values(Variable::T, |x| x + 5.0).unwrap();
                out.insert(t).unwrap();
                out
            })
            .collect();
        let prm = MteParams::default();
        let a = ensemble_mte(&perturbations(&ms, L850, &MTE_VARIABLES).unwrap(), &prm).unwrap();
        let b = ensemble_mte(&perturbations(&shifted, L850, &MTE_VARIABLES).unwrap(), &prm).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() <= 1e-9 * x.max(1.0));
        }
    }
}
