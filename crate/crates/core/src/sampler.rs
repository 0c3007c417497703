//! Measurement shots from a split twin-Fock source.
//!
//! The spin rotation acts on the spin factor and the splitting on the spatial
//! factor, so they commute. A perp shot is drawn by rotating the unsplit
//! twin-Fock state first, which fixes the per-spin totals `(n + m, n - m)`
//! with `P(m) = |d^n_{m,0}(π/2)|²`, and then partitioning each spin level
//! binomially between the clouds. Sectors of different `m` cannot interfere
//! because the per-spin totals are themselves measured.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::TAU;

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fock::{half_pi_row, make_twin_fock, split_antisymmetric, Occupation, SqueezedSourceParams};
use crate::math::binomial_pmf;
use crate::noise::{
    apply_dephasing, apply_detection_noise, apply_spin_flips, apply_split_jitter, draw_split_offset, NoiseError,
    NoiseModel,
};
use crate::rng::{substream, Domain};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Basis {
    Z,
    Perp,
}

impl Basis {
    pub fn as_str(self) -> &'static str {
        match self {
            Basis::Z => "z",
            Basis::Perp => "perp",
        }
    }
}

impl std::str::FromStr for Basis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "z" => Ok(Basis::Z),
            "perp" => Ok(Basis::Perp),
            other => Err(format!("unknown basis {other:?}, expected \"z\" or \"perp\"")),
        }
    }
}

/// One measurement: the four mask counts, and the rotation azimuth for perp shots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub shot_id: u64,
    pub basis: Basis,
    pub na_plus: f64,
    pub na_minus: f64,
    pub nb_plus: f64,
    pub nb_minus: f64,
    pub phase: Option<f64>,
}

impl ShotRecord {
    pub fn from_counts(shot_id: u64, basis: Basis, counts: [u32; 4], phase: Option<f64>) -> Self {
        Self {
            shot_id,
            basis,
            na_plus: counts[0] as f64,
            na_minus: counts[1] as f64,
            nb_plus: counts[2] as f64,
            nb_minus: counts[3] as f64,
            phase,
        }
    }

    pub fn counts(&self) -> [f64; 4] {
        [self.na_plus, self.na_minus, self.nb_plus, self.nb_minus]
    }

    pub(crate) fn counts_mut(&mut self) -> [&mut f64; 4] {
        [&mut self.na_plus, &mut self.na_minus, &mut self.nb_plus, &mut self.nb_minus]
    }

    pub fn n_total(&self) -> f64 {
        self.na_plus + self.na_minus + self.nb_plus + self.nb_minus
    }

    /// `(n+ - n-)/2` of cloud a.
    pub fn spin_a(&self) -> f64 {
        (self.na_plus - self.na_minus) / 2.0
    }

    pub fn spin_b(&self) -> f64 {
        (self.nb_plus - self.nb_minus) / 2.0
    }

    pub fn j_a(&self) -> f64 {
        (self.na_plus + self.na_minus) / 2.0
    }

    pub fn j_b(&self) -> f64 {
        (self.nb_plus + self.nb_minus) / 2.0
    }
}

/// Distribution of the pair number `n` (so `N = 2n`) across shots.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Source {
    Fixed { n_pairs: u32 },
    /// Total atom number drawn from a rounded Gaussian and forced even.
    Gaussian { n_mean: f64, n_sigma: f64 },
    /// Pair number drawn from the truncated squeezed-vacuum weights.
    Squeezed(SqueezedSourceParams),
}

impl Source {
    pub fn draw_pairs<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        match *self {
            Source::Fixed { n_pairs } => n_pairs,
            Source::Gaussian { n_mean, n_sigma } => {
                let n = if n_sigma > 0.0 {
                    Normal::new(n_mean, n_sigma).expect("sigma validated").sample(rng)
                } else {
                    n_mean
                };
                (n / 2.0).round().max(0.0) as u32
            }
            Source::Squeezed(params) => {
                // Truncated geometric law P(n) ∝ tanh²ξ^n by inversion.
                let t2 = params.xi.tanh().powi(2);
                if t2 == 0.0 {
                    return 0;
                }
                let u: f64 = rng.random();
                let tail = t2.powf(params.n_cutoff as f64 + 1.0);
                let n = ((1.0 - u * (1.0 - tail)).ln() / t2.ln()).floor();
                (n.max(0.0) as u32).min(params.n_cutoff)
            }
        }
    }

    fn validate(&self) -> Result<(), SamplerError> {
        match *self {
            Source::Fixed { .. } => Ok(()),
            Source::Gaussian { n_mean, n_sigma } => {
                if n_mean.is_finite() && n_mean >= 0.0 && n_sigma.is_finite() && n_sigma >= 0.0 {
                    Ok(())
                } else {
                    Err(SamplerError::InvalidSource(format!("n_mean={n_mean}, n_sigma={n_sigma}")))
                }
            }
            Source::Squeezed(p) => p.validate().map_err(|e| SamplerError::InvalidSource(e.to_string())),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SamplerError {
    #[error("invalid source: {0}")]
    InvalidSource(String),
    #[error(transparent)]
    Noise(#[from] NoiseError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub source: Source,
    pub shots_z: usize,
    pub shots_perp: usize,
    pub seed: u64,
    /// Shots with fewer atoms than this are drawn by Born sampling of the
    /// full four-mode state vector, unless split jitter is active.
    pub exact_statevector_below: u32,
}

impl SamplerConfig {
    pub fn total_shots(&self) -> usize {
        self.shots_z + self.shots_perp
    }

    /// Basis of shot `id`: strict alternation starting with `z` while both
    /// kinds remain, then the remainder of the larger kind.
    pub fn basis_of(&self, id: usize) -> Basis {
        let paired = 2 * self.shots_z.min(self.shots_perp);
        if id < paired {
            if id % 2 == 0 {
                Basis::Z
            } else {
                Basis::Perp
            }
        } else if self.shots_z > self.shots_perp {
            Basis::Z
        } else {
            Basis::Perp
        }
    }
}

/// Ideal z shot: both spin levels hold `n_pairs` atoms, split fairly.
pub fn sample_z<R: Rng + ?Sized>(n_pairs: u32, rng: &mut R) -> ShotRecord {
    let counts = apply_split_jitter([n_pairs, n_pairs], [0.0, 0.0], rng);
    ShotRecord::from_counts(0, Basis::Z, counts, None)
}

/// Ideal perp shot after a π/2 rotation about a uniformly random azimuth.
pub fn sample_perp<R: Rng + ?Sized>(n_pairs: u32, rng: &mut R) -> ShotRecord {
    let row = PerpRow::new(n_pairs);
    let phase = rng.random::<f64>() * TAU;
    let totals = row.draw_totals(rng);
    let counts = apply_split_jitter(totals, [0.0, 0.0], rng);
    ShotRecord::from_counts(0, Basis::Perp, counts, Some(phase))
}

/// Sampler for the per-spin totals `(n + m, n - m)` after the rotation.
#[derive(Debug, Clone)]
pub struct PerpRow {
    n_pairs: u32,
    index: Option<WeightedIndex<f64>>,
}

impl PerpRow {
    pub fn new(n_pairs: u32) -> Self {
        let index = (n_pairs > 0).then(|| WeightedIndex::new(half_pi_row(n_pairs)).expect("row has positive mass"));
        Self { n_pairs, index }
    }

    pub fn draw_totals<R: Rng + ?Sized>(&self, rng: &mut R) -> [u32; 2] {
        match &self.index {
            None => [0, 0],
            Some(idx) => {
                // index i corresponds to m = i - n
                let i = idx.sample(rng) as u32;
                [i, 2 * self.n_pairs - i]
            }
        }
    }
}

/// Exact outcome distribution of the factorized sampler.
pub fn analytic_distribution(n_pairs: u32, basis: Basis) -> BTreeMap<Occupation, f64> {
    let totals: Vec<(u32, u32, f64)> = match basis {
        Basis::Z => vec![(n_pairs, n_pairs, 1.0)],
        Basis::Perp => half_pi_row(n_pairs)
            .into_iter()
            .enumerate()
            .filter(|(_, p)| *p > 0.0)
            .map(|(i, p)| (i as u32, 2 * n_pairs - i as u32, p))
            .collect(),
    };
    let mut out = BTreeMap::new();
    for (n_plus, n_minus, w) in totals {
        for k_plus in 0..=n_plus {
            let p_plus = binomial_pmf(n_plus as u64, k_plus as u64, 0.5);
            for k_minus in 0..=n_minus {
                let p = w * p_plus * binomial_pmf(n_minus as u64, k_minus as u64, 0.5);
                *out.entry([k_plus, k_minus, n_plus - k_plus, n_minus - k_minus])
                    .or_insert(0.0) += p;
            }
        }
    }
    out
}

/// Born distribution of the state vector: rotate the twin-Fock state, split
/// it, and read the four occupations.
pub fn statevector_distribution(n_pairs: u32, basis: Basis, phase: f64) -> BTreeMap<Occupation, f64> {
    let twin = make_twin_fock(n_pairs);
    let state = match basis {
        Basis::Z => split_antisymmetric(&twin),
        Basis::Perp => split_antisymmetric(&twin.rotate_pi_half(phase)),
    };
    state.probabilities()
}

pub fn total_variation(p: &BTreeMap<Occupation, f64>, q: &BTreeMap<Occupation, f64>) -> f64 {
    let mut tv = 0.0;
    for (k, a) in p {
        tv += (a - q.get(k).copied().unwrap_or(0.0)).abs();
    }
    for (k, b) in q {
        if !p.contains_key(k) {
            tv += b.abs();
        }
    }
    0.5 * tv
}

fn born_sample<R: Rng + ?Sized>(dist: &BTreeMap<Occupation, f64>, rng: &mut R) -> [u32; 4] {
    let total: f64 = dist.values().sum();
    let mut u = rng.random::<f64>() * total;
    let mut last = [0; 4];
    for (occ, p) in dist {
        last = *occ;
        if u < *p {
            return *occ;
        }
        u -= p;
    }
    last
}

/// Shots `0..shots_z + shots_perp`, deterministic in `cfg.seed` and
/// independent of thread count. Shot `i` draws its pair number from the
/// `Campaign` substream `i`, its ideal counts from the `Shot` substream `i`
/// and its technical noise from the `Noise` substream `i`.
pub fn sample_campaign(cfg: &SamplerConfig, noise: &NoiseModel) -> Result<Vec<ShotRecord>, SamplerError> {
    cfg.source.validate()?;
    noise.validate()?;
    let total = cfg.total_shots();
    let pairs: Vec<u32> = (0..total)
        .into_par_iter()
        .map(|i| cfg.source.draw_pairs(&mut substream(cfg.seed, Domain::Campaign, i as u64)))
        .collect();

    let mut needed: Vec<u32> = (0..total)
        .filter(|&i| cfg.basis_of(i) == Basis::Perp)
        .map(|i| pairs[i])
        .collect();
    needed.sort_unstable();
    needed.dedup();
    let rows: HashMap<u32, PerpRow> = needed.into_par_iter().map(|n| (n, PerpRow::new(n))).collect();

    let noise_key = noise.noise_seed(cfg.seed);
    let use_statevector = |n_pairs: u32| 2 * n_pairs < cfg.exact_statevector_below && noise.split_sigma == 0.0;

    Ok((0..total)
        .into_par_iter()
        .map(|i| {
            let basis = cfg.basis_of(i);
            let n_pairs = pairs[i];
            let mut rng = substream(cfg.seed, Domain::Shot, i as u64);
            let mut noise_rng = substream(noise_key, Domain::Noise, i as u64);
            let phase = (basis == Basis::Perp).then(|| rng.random::<f64>() * TAU);

            let mut counts = if use_statevector(n_pairs) {
                born_sample(&statevector_distribution(n_pairs, basis, phase.unwrap_or(0.0)), &mut rng)
            } else {
                let totals = match basis {
                    Basis::Z => [n_pairs, n_pairs],
                    Basis::Perp => rows[&n_pairs].draw_totals(&mut rng),
                };
                let delta = [
                    draw_split_offset(noise.split_sigma, &mut noise_rng),
                    draw_split_offset(noise.split_sigma, &mut noise_rng),
                ];
                apply_split_jitter(totals, delta, &mut rng)
            };
            if basis == Basis::Perp {
                counts = apply_dephasing(counts, noise.perp_dephase, &mut noise_rng);
            }
            counts = apply_spin_flips(counts, noise.flip_prob, &mut noise_rng);
            let shot = ShotRecord::from_counts(i as u64, basis, counts, phase);
            apply_detection_noise(&shot, noise, &mut noise_rng)
        })
        .collect())
}
