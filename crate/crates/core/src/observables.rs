//! Collective spin moments and the separability criterion.
//!
//! Each cloud carries a Schwinger spin built from its two spin modes,
//! `J+ = a+^dag a-`, `Jz = (n+ - n-)/2`, spin length `j = (n+ + n-)/2`. In this
//! representation `J^2 = j(j+1)` holds identically, so `Jx^2 + Jy^2` is diagonal
//! in the occupation basis. The ratio `J/j` is undefined in the sector where a
//! cloud is empty; that sector contributes zero and its weight is reported.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fock::{FockState, Occupation, TwoModeState, A_MINUS, A_PLUS, B_MINUS, B_PLUS};
use crate::math::half_binomial_row;

#[derive(Debug, Error, PartialEq)]
pub enum ObservablesError {
    #[error("normalized spin of cloud {cloud} is undefined: no weight outside the empty sector")]
    EmptyCloud { cloud: char },
    #[error("f(x, y) needs x, y > 0, got ({x}, {y})")]
    NonPositive { x: f64, y: f64 },
    #[error("moment {name} is not finite: {value}")]
    NotFinite { name: &'static str, value: f64 },
    #[error("squeezing needs var >= 0 and n_total > 0, got var={var}, n_total={n_total}")]
    SqueezingDomain { var: f64, n_total: f64 },
}

/// Moments entering the criterion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpinMoments {
    /// `Var(Jz^a + Jz^b)`, atoms².
    pub var_jz_plus: f64,
    /// `<(J̃x^-)^2 + (J̃y^-)^2>`.
    pub perp_sq_mean: f64,
    pub j_norm_a: f64,
    pub j_norm_b: f64,
    pub n_mean: f64,
    /// Cross-cloud correlation `<(Jx^a Jx^b + Jy^a Jy^b)/(j_a j_b)>`.
    pub correlation: f64,
    /// Probability that cloud a (b) is empty.
    pub empty_weight_a: f64,
    pub empty_weight_b: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub lhs: f64,
    pub rhs: f64,
    pub violated: bool,
    pub margin: f64,
    /// Whether the moments lie where the separable bound is actually proven:
    /// `J_a, J_b <= 1` and `J_a^2 + J_b^2 >= 1`. Outside this region product
    /// states can also give `lhs < rhs`.
    pub in_proof_domain: bool,
}

fn spin_length(occ: &Occupation, cloud: usize) -> f64 {
    (occ[cloud] + occ[cloud + 1]) as f64 / 2.0
}

fn transverse_over_j2(n_plus: u32, n_minus: u32) -> Option<f64> {
    let j = (n_plus + n_minus) as f64 / 2.0;
    if j == 0.0 {
        return None;
    }
    let m = (n_plus as f64 - n_minus as f64) / 2.0;
    Some((j * (j + 1.0) - m * m) / (j * j))
}

/// `<(Jx^2 + Jy^2)/j^2>` of a single two-mode state.
///
/// For the unsplit twin-Fock state this is `1 + 2/N`.
pub fn transverse_ratio(state: &TwoModeState) -> Option<f64> {
    let mut acc = 0.0;
    let mut weight = 0.0;
    for (occ, amp) in state.iter() {
        if let Some(r) = transverse_over_j2(occ[0], occ[1]) {
            acc += amp.norm_sqr() * r;
            weight += amp.norm_sqr();
        }
    }
    (weight > 0.0).then_some(acc)
}

/// Exact moments of a four-mode state.
pub fn collective_moments(state: &FockState) -> Result<SpinMoments, ObservablesError> {
    let total = state.norm_sqr();
    let mut mean_z = 0.0;
    let mut mean_z2 = 0.0;
    let mut n_mean = 0.0;
    let mut ja2 = 0.0;
    let mut jb2 = 0.0;
    let mut empty_a = 0.0;
    let mut empty_b = 0.0;
    let mut cross = 0.0;

    for (occ, amp) in state.iter() {
        let p = amp.norm_sqr() / total;
        let jz = (occ[A_PLUS] as f64 - occ[A_MINUS] as f64 + occ[B_PLUS] as f64
            - occ[B_MINUS] as f64)
            / 2.0;
        mean_z += p * jz;
        mean_z2 += p * jz * jz;
        n_mean += p * occ.iter().map(|&n| n as f64).sum::<f64>();
        match transverse_over_j2(occ[A_PLUS], occ[A_MINUS]) {
            Some(r) => ja2 += p * r,
            None => empty_a += p,
        }
        match transverse_over_j2(occ[B_PLUS], occ[B_MINUS]) {
            Some(r) => jb2 += p * r,
            None => empty_b += p,
        }

        // <psi| Ja+ Jb- |psi>; the Hermitian partner contributes the conjugate.
        if occ[A_MINUS] > 0 && occ[B_PLUS] > 0 {
            let target = [
                occ[A_PLUS] + 1,
                occ[A_MINUS] - 1,
                occ[B_PLUS] - 1,
                occ[B_MINUS] + 1,
            ];
            let partner = state.amplitude(&target);
            if partner.norm_sqr() > 0.0 {
                let coef = (((occ[A_PLUS] + 1) as f64) * occ[A_MINUS] as f64).sqrt()
                    * ((occ[B_PLUS] as f64) * (occ[B_MINUS] + 1) as f64).sqrt();
                let ja = spin_length(occ, A_PLUS);
                let jb = spin_length(occ, B_PLUS);
                cross += (partner.conj() * amp).re * coef / (ja * jb) / total;
            }
        }
    }

    if ja2 <= 0.0 {
        return Err(ObservablesError::EmptyCloud { cloud: 'a' });
    }
    if jb2 <= 0.0 {
        return Err(ObservablesError::EmptyCloud { cloud: 'b' });
    }
    let j_norm_a = ja2.sqrt();
    let j_norm_b = jb2.sqrt();
    Ok(SpinMoments {
        var_jz_plus: (mean_z2 - mean_z * mean_z).max(0.0),
        perp_sq_mean: perp_from_correlation(cross, j_norm_a, j_norm_b),
        j_norm_a,
        j_norm_b,
        n_mean,
        correlation: cross,
        empty_weight_a: empty_a,
        empty_weight_b: empty_b,
    })
}

/// `<(J̃x^-)^2 + (J̃y^-)^2> = 2 - 2C/S`, since each cloud's normalized
/// transverse spin has unit mean square.
pub fn perp_from_correlation(correlation: f64, j_norm_a: f64, j_norm_b: f64) -> f64 {
    (2.0 - 2.0 * correlation / (j_norm_a * j_norm_b)).max(0.0)
}

/// Exact moments of the split twin-Fock state with `n_pairs` atoms per spin
/// level, in `O(n^2)` without building the state.
pub fn split_twin_fock_moments(n_pairs: u32) -> Result<SpinMoments, ObservablesError> {
    if n_pairs == 0 {
        return Err(ObservablesError::EmptyCloud { cloud: 'a' });
    }
    let n = n_pairs as usize;
    let prob = half_binomial_row(n_pairs as u64);
    let amp: Vec<f64> = prob.iter().map(|p| p.sqrt()).collect();

    let mut ja2 = 0.0;
    let mut empty = 0.0;
    let mut cross = 0.0;
    for kp in 0..=n {
        for km in 0..=n {
            let p = prob[kp] * prob[km];
            match transverse_over_j2(kp as u32, km as u32) {
                Some(r) => ja2 += p * r,
                None => empty += p,
            }
            // (kp, km) -> (kp + 1, km - 1) in cloud a, opposite move in cloud b.
            // Both split amplitudes flip sign, so every term is positive.
            if km >= 1 && kp < n {
                let coef = (((kp + 1) * km) as f64).sqrt() * (((n - kp) * (n - km + 1)) as f64).sqrt();
                let ja = (kp + km) as f64 / 2.0;
                let jb = (2 * n - kp - km) as f64 / 2.0;
                cross += amp[kp + 1] * amp[km - 1] * amp[kp] * amp[km] * coef / (ja * jb);
            }
        }
    }
    let j_norm = ja2.sqrt();
    Ok(SpinMoments {
        var_jz_plus: 0.0,
        perp_sq_mean: perp_from_correlation(cross, j_norm, j_norm),
        j_norm_a: j_norm,
        j_norm_b: j_norm,
        n_mean: 2.0 * n_pairs as f64,
        correlation: cross,
        empty_weight_a: empty,
        empty_weight_b: empty,
    })
}

/// `f(x, y) = (x^2 + y^2 - 1)^2 / (xy)`.
pub fn f_bound(x: f64, y: f64) -> Result<f64, ObservablesError> {
    if !(x > 0.0 && y > 0.0) {
        return Err(ObservablesError::NonPositive { x, y });
    }
    Ok((x * x + y * y - 1.0).powi(2) / (x * y))
}

pub fn in_proof_domain(j_norm_a: f64, j_norm_b: f64) -> bool {
    j_norm_a <= 1.0 && j_norm_b <= 1.0 && j_norm_a * j_norm_a + j_norm_b * j_norm_b >= 1.0
}

pub fn evaluate_criterion(m: &SpinMoments) -> Result<CriterionResult, ObservablesError> {
    for (name, value) in [
        ("var_jz_plus", m.var_jz_plus),
        ("perp_sq_mean", m.perp_sq_mean),
        ("j_norm_a", m.j_norm_a),
        ("j_norm_b", m.j_norm_b),
    ] {
        if !value.is_finite() {
            return Err(ObservablesError::NotFinite { name, value });
        }
    }
    let lhs = (m.var_jz_plus + 0.5) * m.perp_sq_mean;
    let rhs = f_bound(m.j_norm_a, m.j_norm_b)?;
    Ok(CriterionResult {
        lhs,
        rhs,
        violated: lhs < rhs,
        margin: rhs - lhs,
        in_proof_domain: in_proof_domain(m.j_norm_a, m.j_norm_b),
    })
}

/// Number squeezing relative to the shot-noise variance `N/4`. Zero variance
/// maps to negative infinity.
pub fn squeezing_db(var: f64, n_total: f64) -> Result<f64, ObservablesError> {
    if !(var >= 0.0 && n_total > 0.0) {
        return Err(ObservablesError::SqueezingDomain { var, n_total });
    }
    if var == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(10.0 * (var / (n_total / 4.0)).log10())
}
