//! Fock-space states of the four readout modes and passive mode transforms.
//!
//! A [`TwoModeState`] lives in the two spin modes `m_F = ±1` of a single
//! spatial mode, before splitting. A [`FockState`] lives in the four modes
//! `(a+, a-, b+, b-)` after the spatial split into a left cloud `a` and a
//! right cloud `b`. Both store amplitudes sparsely, keyed by occupation.
//!
//! Conventions:
//!
//! * Splitting maps every spin mode's creation operator of the populated
//!   antisymmetric input to `(a† - b†)/√2`; the symmetric input is vacuum.
//!   A Fock level `|n⟩` becomes `Σ_k (-1)^(n-k) √C(n,k) 2^(-n/2) |k⟩_a |n-k⟩_b`.
//! * A rotation by `β` about the in-plane axis at azimuth `φ` acts on single
//!   atoms as `exp(-iβ (cos φ σx + sin φ σy)/2)`, with `σ` in the `(+, -)` basis.
//!   Collective spins use the Schwinger map `J+ = a+† a-`, `Jz = (n+ - n-)/2`.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use num_complex::Complex64;
use statrs::function::factorial::ln_factorial;
use thiserror::Error;

use crate::math::ln_binomial;

pub const A_PLUS: usize = 0;
pub const A_MINUS: usize = 1;
pub const B_PLUS: usize = 2;
pub const B_MINUS: usize = 3;

/// Occupation `(a+, a-, b+, b-)`.
pub type Occupation = [u32; 4];

/// Largest tail weight tolerated when truncating the squeezed vacuum.
pub const SQUEEZED_TAIL_LIMIT: f64 = 1e-9;

/// Squared amplitudes below this are dropped after a transform.
const PRUNE_BELOW: f64 = 1e-34;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FockError {
    #[error("squeezing strength must be finite and non-negative, got {0}")]
    InvalidSqueezing(f64),
    #[error("pair cutoff {cutoff} leaves tail weight {tail:e}, above the limit {limit:e}")]
    CutoffTooSmall { cutoff: u32, tail: f64, limit: f64 },
    #[error("Wigner index out of domain (2j = {two_j}, 2m = {two_m}): {reason}")]
    WignerDomain {
        two_j: u32,
        two_m: i32,
        reason: &'static str,
    },
}

fn prune<K: Ord>(amps: BTreeMap<K, Complex64>) -> BTreeMap<K, Complex64> {
    amps.into_iter()
        .filter(|(_, a)| a.norm_sqr() > PRUNE_BELOW)
        .collect()
}

/// State of the two spin modes `(n+, n-)` of one spatial mode.
///
/// Also used for the spin state of a single cloud.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TwoModeState {
    amps: BTreeMap<[u32; 2], Complex64>,
}

impl TwoModeState {
    pub fn vacuum() -> Self {
        Self::from_amplitudes([([0, 0], Complex64::new(1.0, 0.0))])
    }

    pub fn from_amplitudes<I>(amps: I) -> Self
    where
        I: IntoIterator<Item = ([u32; 2], Complex64)>,
    {
        let mut map = BTreeMap::new();
        for (k, a) in amps {
            *map.entry(k).or_insert(Complex64::new(0.0, 0.0)) += a;
        }
        Self { amps: prune(map) }
    }

    pub fn amplitude(&self, n_plus: u32, n_minus: u32) -> Complex64 {
        self.amps
            .get(&[n_plus, n_minus])
            .copied()
            .unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[u32; 2], &Complex64)> {
        self.amps.iter()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalized(mut self) -> Self {
        let norm = self.norm_sqr().sqrt();
        if norm > 0.0 {
            for a in self.amps.values_mut() {
                *a /= norm;
            }
        }
        self
    }

    /// Born probabilities of `(n+, n-)`.
    pub fn probabilities(&self) -> BTreeMap<[u32; 2], f64> {
        self.amps.iter().map(|(k, a)| (*k, a.norm_sqr())).collect()
    }

    /// Rotation by `beta` about the in-plane axis at azimuth `phase`.
    pub fn rotate(&self, beta: f64, phase: f64) -> Self {
        let u = rotation_matrix(beta, phase);
        Self {
            amps: transform_modes(&self.amps, 0, 1, &u),
        }
    }

    /// Collective `π/2` rotation about the in-plane axis at azimuth `phase`.
    pub fn rotate_pi_half(&self, phase: f64) -> Self {
        self.rotate(FRAC_PI_2, phase)
    }
}

/// Twin-Fock state `|n⟩₊|n⟩₋` with `N = 2·n_pairs` atoms.
pub fn make_twin_fock(n_pairs: u32) -> TwoModeState {
    TwoModeState::from_amplitudes([([n_pairs, n_pairs], Complex64::new(1.0, 0.0))])
}

/// Parameters of the two-mode squeezed vacuum produced by spin dynamics.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SqueezedSourceParams {
    /// Spin-dynamics rate in rad/s, when `xi` was derived from it.
    pub omega: Option<f64>,
    /// Interaction time in seconds, when `xi` was derived from it.
    pub t: Option<f64>,
    /// Squeezing strength `xi = omega * t`.
    pub xi: f64,
    /// Largest pair number kept.
    pub n_cutoff: u32,
}

impl SqueezedSourceParams {
    pub fn from_xi(xi: f64, n_cutoff: u32) -> Self {
        Self {
            omega: None,
            t: None,
            xi,
            n_cutoff,
        }
    }

    pub fn from_rate(omega: f64, t: f64, n_cutoff: u32) -> Self {
        Self {
            omega: Some(omega),
            t: Some(t),
            xi: omega * t,
            n_cutoff,
        }
    }

    /// Weight `Σ_{n > cutoff} |c_n|² = tanh^(2(cutoff+1)) ξ` lost to truncation.
    pub fn tail_weight(&self) -> f64 {
        self.xi.tanh().powi(2).powf(self.n_cutoff as f64 + 1.0)
    }

    /// Mean pair number `sinh² ξ` of the untruncated state.
    pub fn mean_pairs(&self) -> f64 {
        self.xi.sinh().powi(2)
    }

    pub fn validate(&self) -> Result<(), FockError> {
        if !self.xi.is_finite() || self.xi < 0.0 {
            return Err(FockError::InvalidSqueezing(self.xi));
        }
        let tail = self.tail_weight();
        if tail >= SQUEEZED_TAIL_LIMIT {
            return Err(FockError::CutoffTooSmall {
                cutoff: self.n_cutoff,
                tail,
                limit: SQUEEZED_TAIL_LIMIT,
            });
        }
        Ok(())
    }

    /// Probability `|c_n|²` of `n` pairs, before truncation.
    pub fn pair_probability(&self, n: u32) -> f64 {
        let t2 = self.xi.tanh().powi(2);
        t2.powi(n as i32) * (1.0 - t2)
    }

    /// Smallest cutoff whose tail weight is below the truncation limit.
    pub fn minimal_cutoff(xi: f64) -> u32 {
        let t2 = xi.tanh().powi(2);
        if t2 == 0.0 {
            return 0;
        }
        let n = (SQUEEZED_TAIL_LIMIT.ln() / t2.ln()).ceil() as u32;
        n.max(1)
    }
}

/// Two-mode squeezed vacuum `Σ_n c_n |n⟩|n⟩`, `c_n = (-i tanh ξ)^n / cosh ξ`,
/// truncated at `n_cutoff` and renormalized.
pub fn make_squeezed_vacuum(params: &SqueezedSourceParams) -> Result<TwoModeState, FockError> {
    params.validate()?;
    let t = params.xi.tanh();
    let c0 = 1.0 / params.xi.cosh();
    let minus_i = Complex64::new(0.0, -1.0);
    let amps = (0..=params.n_cutoff).map(|n| {
        let c = minus_i.powu(n) * t.powi(n as i32) * c0;
        ([n, n], c)
    });
    Ok(TwoModeState::from_amplitudes(amps).normalized())
}

/// State of the four modes `(a+, a-, b+, b-)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FockState {
    amps: BTreeMap<Occupation, Complex64>,
}

impl FockState {
    pub fn from_amplitudes<I>(amps: I) -> Self
    where
        I: IntoIterator<Item = (Occupation, Complex64)>,
    {
        let mut map = BTreeMap::new();
        for (k, a) in amps {
            *map.entry(k).or_insert(Complex64::new(0.0, 0.0)) += a;
        }
        Self { amps: prune(map) }
    }

    /// Tensor product of a cloud-`a` and a cloud-`b` spin state.
    pub fn product(cloud_a: &TwoModeState, cloud_b: &TwoModeState) -> Self {
        let amps = cloud_a.iter().flat_map(|(ka, aa)| {
            cloud_b
                .iter()
                .map(move |(kb, ab)| ([ka[0], ka[1], kb[0], kb[1]], aa * ab))
        });
        Self::from_amplitudes(amps)
    }

    pub fn amplitude(&self, occ: &Occupation) -> Complex64 {
        self.amps.get(occ).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Occupation, &Complex64)> {
        self.amps.iter()
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn probabilities(&self) -> BTreeMap<Occupation, f64> {
        self.amps.iter().map(|(k, a)| (*k, a.norm_sqr())).collect()
    }

    /// Local rotation of both clouds by `beta` about the axis at azimuth `phase`.
    pub fn rotate(&self, beta: f64, phase: f64) -> Self {
        let u = rotation_matrix(beta, phase);
        let rotated_a = transform_modes(&self.amps, A_PLUS, A_MINUS, &u);
        Self {
            amps: transform_modes(&rotated_a, B_PLUS, B_MINUS, &u),
        }
    }

    pub fn rotate_pi_half(&self, phase: f64) -> Self {
        self.rotate(FRAC_PI_2, phase)
    }
}

/// Split amplitude `(-1)^(n-k) √C(n,k) 2^(-n/2)` of `k` atoms going left.
pub fn split_amplitude(n: u32, k: u32) -> f64 {
    let magnitude = (0.5 * (ln_binomial(n as u64, k as u64) - n as f64 * std::f64::consts::LN_2)).exp();
    if (n - k) % 2 == 0 {
        magnitude
    } else {
        -magnitude
    }
}

/// Beam splitter on the populated antisymmetric input mode.
pub fn split_antisymmetric(state: &TwoModeState) -> FockState {
    let amps = state.iter().flat_map(|(&[n_plus, n_minus], &amp)| {
        (0..=n_plus).flat_map(move |k_plus| {
            let g_plus = split_amplitude(n_plus, k_plus);
            (0..=n_minus).map(move |k_minus| {
                let g = g_plus * split_amplitude(n_minus, k_minus);
                ([k_plus, k_minus, n_plus - k_plus, n_minus - k_minus], amp * g)
            })
        })
    });
    FockState::from_amplitudes(amps)
}

/// Single-atom matrix `U[out][in]` of a rotation by `beta` about the axis at
/// azimuth `phase`, in the `(+, -)` basis.
pub fn rotation_matrix(beta: f64, phase: f64) -> [[Complex64; 2]; 2] {
    let c = Complex64::new((beta / 2.0).cos(), 0.0);
    let s = (beta / 2.0).sin();
    let minus_i_s = Complex64::new(0.0, -s);
    [
        [c, minus_i_s * Complex64::from_polar(1.0, -phase)],
        [minus_i_s * Complex64::from_polar(1.0, phase), c],
    ]
}

/// Balanced beam-splitter matrix with the antisymmetric input in column 0.
pub fn splitter_matrix() -> [[Complex64; 2]; 2] {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    [[h, h], [-h, h]]
}

/// Applies a linear two-mode transform to modes `i` and `j`.
///
/// Creation operators map as `a_i† → u[0][0] a_i† + u[1][0] a_j†` and
/// `a_j† → u[0][1] a_i† + u[1][1] a_j†`.
pub fn transform_modes<const D: usize>(
    amps: &BTreeMap<[u32; D], Complex64>,
    i: usize,
    j: usize,
    u: &[[Complex64; 2]; 2],
) -> BTreeMap<[u32; D], Complex64> {
    let mut out: BTreeMap<[u32; D], Complex64> = BTreeMap::new();
    for (occ, &amp) in amps {
        let p = occ[i] as u64;
        let q = occ[j] as u64;
        let n = p + q;
        let ln_norm = -0.5 * (ln_factorial(p) + ln_factorial(q));
        for r in 0..=p {
            let from_i = u[0][0].powu(r as u32) * u[1][0].powu((p - r) as u32);
            for s in 0..=q {
                let from_j = u[0][1].powu(s as u32) * u[1][1].powu((q - s) as u32);
                let out_i = r + s;
                let out_j = n - out_i;
                let weight = (ln_binomial(p, r)
                    + ln_binomial(q, s)
                    + ln_norm
                    + 0.5 * (ln_factorial(out_i) + ln_factorial(out_j)))
                .exp();
                let mut key = *occ;
                key[i] = out_i as u32;
                key[j] = out_j as u32;
                *out.entry(key).or_default() += amp * from_i * from_j * weight;
            }
        }
    }
    prune(out)
}

/// `d^j_{m,0}(π/2)` for integer `j = two_j/2` and `m = two_m/2`.
///
/// Uses `|d|² = c(a) c(b)` with `a = (j+m)/2`, `b = (j-m)/2` and
/// `c(a) = Π_{i=1..a} (2i-1)/(2i)`, which stays well-scaled for any `j`.
/// Signs follow `d^j_{m0}(β) = √((j-m)!/(j+m)!) P_j^m(cos β)` with the
/// Condon-Shortley phase, so `d^1_{1,0}(π/2) = -1/√2`.
pub fn wigner_d_half_pi(two_j: u32, two_m: i32) -> Result<f64, FockError> {
    let domain = |reason| FockError::WignerDomain {
        two_j,
        two_m,
        reason,
    };
    if two_m.unsigned_abs() > two_j {
        return Err(domain("|m| > j"));
    }
    if (two_j as i64 - two_m as i64) % 2 != 0 {
        return Err(domain("2j and 2m must have equal parity"));
    }
    if two_j % 2 != 0 {
        return Err(domain("m' = 0 requires integer j"));
    }
    let j = (two_j / 2) as i64;
    let m = (two_m / 2) as i64;
    if (j - m).rem_euclid(2) == 1 {
        return Ok(0.0);
    }
    let a = ((j + m) / 2) as u32;
    let b = ((j - m) / 2) as u32;
    let magnitude = (central_ratio(a) * central_ratio(b)).sqrt();
    let odd = if m >= 0 { a % 2 == 1 } else { (j + b as i64) % 2 == 1 };
    Ok(if odd { -magnitude } else { magnitude })
}

/// `C(2a, a) / 4^a`.
fn central_ratio(a: u32) -> f64 {
    (1..=a).fold(1.0, |acc, i| acc * (2 * i - 1) as f64 / (2 * i) as f64)
}

/// Outcome distribution `|d^j_{m,0}(π/2)|²` over `m = -j..=j` (index `m + j`).
pub fn half_pi_row(j: u32) -> Vec<f64> {
    let mut table = Vec::with_capacity(j as usize + 1);
    table.push(1.0);
    for i in 1..=j {
        let prev = table[i as usize - 1];
        table.push(prev * (2 * i - 1) as f64 / (2 * i) as f64);
    }
    (0..=2 * j as usize)
        .map(|idx| {
            // idx = m + j, so j - m = 2j - idx
            if idx % 2 != 0 {
                0.0
            } else {
                table[idx / 2] * table[j as usize - idx / 2]
            }
        })
        .collect()
}
