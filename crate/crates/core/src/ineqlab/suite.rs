//! Fixed regression suite: random smooth bump fields on random star-shaped
//! surfaces, with the largest ratios pinned.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{interpolation_check, lemma31_check, michael_simon_check, prop32_check, IneqError, DEFAULT_SOBOLEV_Q};
use crate::flow::{evolve, StopCriteria};
use crate::geometry::Vec3;
use crate::shapes::{random_unit, star_shaped};

pub const SUITE_MESHES: usize = 10;
pub const SUITE_FIELDS: usize = 100;
const SUITE_LEVEL: usize = 3;
const SUITE_AMPLITUDE: f64 = 0.3;
const SUITE_SEED: u64 = 0x5eed;
const SUITE_FLOW_TIME: f64 = 0.01;

/// Largest Michael–Simon ratio over the suite.
pub const PIN_MICHAEL_SIMON: f64 = 0.2120;
/// Largest `lhs / (rhs / c_n)` of the slice Sobolev bound over the suite.
pub const PIN_LEMMA31: f64 = 0.01948;
/// Largest spacetime Sobolev ratio over the suite.
pub const PIN_PROP32: f64 = 0.03128;
/// Dimensional constant used by the Moser constants: the largest pin.
pub const C_N_EMP: f64 = PIN_MICHAEL_SIMON;

/// Sum of Gaussian bumps `Σ a_m exp(−|x − c_m|² / (2σ_m²))`.
#[derive(Debug, Clone, PartialEq)]
pub struct BumpField {
    bumps: Vec<(Vec3, f64, f64)>,
}

impl BumpField {
    pub fn random<R: Rng>(rng: &mut R) -> Self {
        let count = rng.gen_range(1..=3);
        let bumps = (0..count)
            .map(|_| {
                let c = random_unit(rng) * rng.gen_range(0.8..1.2);
                (c, rng.gen_range(0.15..0.6), rng.gen_range(0.2..1.0))
            })
            .collect();
        Self { bumps }
    }

    pub fn eval(&self, x: &Vec3) -> f64 {
        self.bumps
            .iter()
            .map(|(c, s, a)| a * (-(x - c).norm_squared() / (2.0 * s * s)).exp())
            .sum()
    }
}

/// Samples a bump field on `positions`.
pub fn bump_field(field: &BumpField, positions: &[Vec3]) -> Vec<f64> {
    positions.iter().map(|x| field.eval(x)).collect()
}

/// Maxima over the suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuiteReport {
    pub cases: usize,
    pub michael_simon_max: f64,
    pub lemma31_max: f64,
    pub prop32_max: f64,
    pub interpolation_failures: usize,
    pub interpolation_cases: usize,
}

impl SuiteReport {
    pub fn within_pins(&self) -> bool {
        self.michael_simon_max <= PIN_MICHAEL_SIMON
            && self.lemma31_max <= PIN_LEMMA31
            && self.prop32_max <= PIN_PROP32
            && self.interpolation_failures == 0
    }
}

/// Runs the fixed suite. Deterministic.
pub fn regression_suite() -> Result<SuiteReport, IneqError> {
    let mut report = SuiteReport {
        cases: 0,
        michael_simon_max: 0.0,
        lemma31_max: 0.0,
        prop32_max: 0.0,
        interpolation_failures: 0,
        interpolation_cases: 0,
    };
    let eps_grid = [0.05, 0.3, 1.0, 3.0, 20.0];
    let stop = StopCriteria {
        max_time: SUITE_FLOW_TIME,
        max_steps: 10_000,
        h_max: 1e3,
        dt_floor: 1e-12,
    };
    for m in 0..SUITE_MESHES {
        let mesh = star_shaped(SUITE_LEVEL, SUITE_SEED + m as u64, SUITE_AMPLITUDE)?;
        let traj = evolve(&mesh, &stop, 1).map_err(|e| IneqError::InvalidParameter(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED ^ (m as u64 + 1) << 20);
        for _ in 0..SUITE_FIELDS {
            let bump = BumpField::random(&mut rng);
            let f = bump_field(&bump, mesh.positions());
            report.michael_simon_max = report.michael_simon_max.max(michael_simon_check(&mesh, &f)?.ratio);
            report.lemma31_max = report
                .lemma31_max
                .max(lemma31_check(&mesh, &f, DEFAULT_SOBOLEV_Q)?.ratio);

            let growth = rng.gen_range(-5.0..5.0);
            let v = traj.field(|j, s| {
                let w = (growth * traj.time(j)).exp();
                s.positions().iter().map(|x| w * bump.eval(x)).collect()
            });
            report.prop32_max = report.prop32_max.max(prop32_check(&traj, &v)?.ratio);

            let t = rng.gen_range(1.0..4.0);
            let r = t + rng.gen_range(0.1..4.0);
            let s = r + rng.gen_range(0.1..8.0);
            for eps in eps_grid {
                report.interpolation_cases += 1;
                if !interpolation_check(&mesh, &f, t, r, s, eps)?.holds {
                    report.interpolation_failures += 1;
                }
            }
            report.cases += 1;
        }
    }
    Ok(report)
}
