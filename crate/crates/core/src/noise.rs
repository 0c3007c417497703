//! Technical noise applied to ideal shots.
//!
//! Per shot the order is fixed: split jitter (inside the binomial partition),
//! transverse dephasing (perp shots only), spin mis-assignment, then Gaussian
//! detection noise on each of the four mask counts.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{substream, Domain};
use crate::sampler::ShotRecord;

#[derive(Debug, Error, PartialEq)]
pub enum NoiseError {
    #[error("noise parameter {name} = {value} is outside {allowed}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        allowed: &'static str,
    },
    #[error("calibration grid is empty")]
    EmptyGrid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NoiseModel {
    /// Per-mask detection variance floor, atoms².
    pub det_var_const: f64,
    /// Growth of the per-mask detection variance with the mask count, atoms.
    pub det_var_slope: f64,
    /// Std of the left-fraction offset `δ`, drawn independently for each spin
    /// component in every shot (`p = 1/2 + δ`).
    pub split_sigma: f64,
    /// Probability that an atom is counted in the wrong spin level.
    pub flip_prob: f64,
    /// Probability that an atom's transverse spin is randomized before the
    /// perp readout.
    pub perp_dephase: f64,
    /// Added to the run seed to key the noise substreams.
    pub seed_offset: u64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::none()
    }
}

impl NoiseModel {
    pub const fn none() -> Self {
        Self {
            det_var_const: 0.0,
            det_var_slope: 0.0,
            split_sigma: 0.0,
            flip_prob: 0.0,
            perp_dephase: 0.0,
            seed_offset: 0,
        }
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        let checks: [(&'static str, f64, bool, &'static str); 5] = [
            ("det_var_const", self.det_var_const, self.det_var_const >= 0.0, "[0, inf)"),
            ("det_var_slope", self.det_var_slope, self.det_var_slope >= 0.0, "[0, inf)"),
            ("split_sigma", self.split_sigma, self.split_sigma >= 0.0, "[0, inf)"),
            (
                "flip_prob",
                self.flip_prob,
                (0.0..=0.5).contains(&self.flip_prob),
                "[0, 0.5]",
            ),
            (
                "perp_dephase",
                self.perp_dephase,
                (0.0..=1.0).contains(&self.perp_dephase),
                "[0, 1]",
            ),
        ];
        for (name, value, ok, allowed) in checks {
            if !ok || !value.is_finite() {
                return Err(NoiseError::OutOfRange { name, value, allowed });
            }
        }
        Ok(())
    }

    pub fn has_detection_noise(&self) -> bool {
        self.det_var_const > 0.0 || self.det_var_slope > 0.0
    }

    /// Detection variance of one mask holding `count` atoms.
    pub fn mask_variance(&self, count: f64) -> f64 {
        self.det_var_const + self.det_var_slope * count.max(0.0)
    }

    pub(crate) fn noise_seed(&self, seed: u64) -> u64 {
        seed.wrapping_add(self.seed_offset)
    }
}

pub(crate) fn binomial<R: Rng + ?Sized>(n: u32, p: f64, rng: &mut R) -> u32 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n as u64, p)
        .expect("p checked to lie in (0, 1)")
        .sample(rng) as u32
}

/// Left-fraction offset `δ ~ N(0, sigma)`, redrawn until `1/2 + δ` lies in (0, 1).
pub fn draw_split_offset<R: Rng + ?Sized>(sigma: f64, rng: &mut R) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    let normal = Normal::new(0.0, sigma).expect("sigma validated");
    loop {
        let delta: f64 = normal.sample(rng);
        if delta.abs() < 0.5 {
            return delta;
        }
    }
}

/// Partition per-spin totals `(n+, n-)` between the clouds with left
/// fractions `1/2 + delta[0]` and `1/2 + delta[1]`. Returns `(a+, a-, b+, b-)`;
/// each spin component's total is conserved.
pub fn apply_split_jitter<R: Rng + ?Sized>(totals: [u32; 2], delta: [f64; 2], rng: &mut R) -> [u32; 4] {
    let a_plus = binomial(totals[0], 0.5 + delta[0], rng);
    let a_minus = binomial(totals[1], 0.5 + delta[1], rng);
    [a_plus, a_minus, totals[0] - a_plus, totals[1] - a_minus]
}

/// Each atom is assigned to the other spin level with probability `flip_prob`.
pub fn apply_spin_flips<R: Rng + ?Sized>(counts: [u32; 4], flip_prob: f64, rng: &mut R) -> [u32; 4] {
    if flip_prob == 0.0 {
        return counts;
    }
    let mut out = counts;
    for cloud in [0, 2] {
        let up = binomial(counts[cloud], flip_prob, rng);
        let down = binomial(counts[cloud + 1], flip_prob, rng);
        out[cloud] = counts[cloud] - up + down;
        out[cloud + 1] = counts[cloud + 1] - down + up;
    }
    out
}

/// Each atom independently, with probability `q`, ends up in a uniformly
/// random spin level. Cloud totals are conserved.
pub fn apply_dephasing<R: Rng + ?Sized>(counts: [u32; 4], q: f64, rng: &mut R) -> [u32; 4] {
    if q == 0.0 {
        return counts;
    }
    let mut out = counts;
    for cloud in [0, 2] {
        let from_plus = binomial(counts[cloud], q, rng);
        let from_minus = binomial(counts[cloud + 1], q, rng);
        let pool = from_plus + from_minus;
        let to_plus = binomial(pool, 0.5, rng);
        out[cloud] = counts[cloud] - from_plus + to_plus;
        out[cloud + 1] = counts[cloud + 1] - from_minus + (pool - to_plus);
    }
    out
}

/// Independent Gaussian noise on each mask with variance
/// `det_var_const + det_var_slope * count`. Noisy counts are not clipped.
pub fn apply_detection_noise<R: Rng + ?Sized>(shot: &ShotRecord, model: &NoiseModel, rng: &mut R) -> ShotRecord {
    if !model.has_detection_noise() {
        return shot.clone();
    }
    let mut out = shot.clone();
    for c in out.counts_mut() {
        let sd = model.mask_variance(*c).sqrt();
        if sd > 0.0 {
            let z: f64 = rand_distr::StandardNormal.sample(rng);
            *c += sd * z;
        }
    }
    out
}

/// A calibration shot: nominally `n_nominal / 4` atoms in each mask, with
/// detection noise only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub shot_id: u64,
    pub n_nominal: u32,
    pub na_plus: f64,
    pub na_minus: f64,
    pub nb_plus: f64,
    pub nb_minus: f64,
}

impl CalibrationRecord {
    pub fn counts(&self) -> [f64; 4] {
        [self.na_plus, self.na_minus, self.nb_plus, self.nb_minus]
    }

    pub fn mask_count(&self) -> f64 {
        self.n_nominal as f64 / 4.0
    }
}

pub fn make_calibration_records(
    model: &NoiseModel,
    n_grid: &[u32],
    shots_per_point: usize,
    seed: u64,
) -> Result<Vec<CalibrationRecord>, NoiseError> {
    if n_grid.is_empty() {
        return Err(NoiseError::EmptyGrid);
    }
    model.validate()?;
    let total = n_grid.len() * shots_per_point;
    let key = model.noise_seed(seed);
    Ok((0..total)
        .into_par_iter()
        .map(|i| {
            let n_nominal = n_grid[i / shots_per_point];
            let mask = n_nominal as f64 / 4.0;
            let mut rng = substream(key, Domain::Calibration, i as u64);
            let sd = model.mask_variance(mask).sqrt();
            let mut counts = [mask; 4];
            if sd > 0.0 {
                for c in &mut counts {
                    let z: f64 = rand_distr::StandardNormal.sample(&mut rng);
                    *c += sd * z;
                }
            }
            CalibrationRecord {
                shot_id: i as u64,
                n_nominal,
                na_plus: counts[0],
                na_minus: counts[1],
                nb_plus: counts[2],
                nb_minus: counts[3],
            }
        })
        .collect())
}
