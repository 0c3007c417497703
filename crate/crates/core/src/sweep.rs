//! Tune the noise model to a target noise budget.
//!
//! Each target is driven mainly by one parameter: corrected number squeezing
//! by `flip_prob`, the transverse length `J` by `perp_dephase`, and the
//! transverse noise ratio by `split_sigma`. Every evaluation reuses the same
//! seed, so the random numbers are common across trial values and bisection
//! sees a smooth response. `perp_dephase` and `split_sigma` interact weakly
//! and are refined alternately.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{estimate_core, BaselineCache, BinSamples, DetectionNoiseFit};
use crate::noise::NoiseModel;
use crate::observables::squeezing_db;
use crate::sampler::{sample_campaign, SamplerConfig, SamplerError, Source};

#[derive(Debug, Error)]
pub enum SweepError {
    #[error(transparent)]
    Sampler(#[from] SamplerError),
    #[error("{what} target {target} is outside the reachable range [{lo}, {hi}]")]
    Unreachable {
        what: &'static str,
        target: f64,
        lo: f64,
        hi: f64,
    },
    #[error("estimation failed: {0}")]
    Estimate(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepTargets {
    pub squeeze_db: f64,
    pub perp_std_ratio: f64,
    pub j_norm: f64,
}

impl Default for SweepTargets {
    fn default() -> Self {
        Self {
            squeeze_db: -11.0,
            perp_std_ratio: 1.8,
            j_norm: 0.94,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub source: Source,
    pub det_var_const: f64,
    pub det_var_slope: f64,
    pub targets: SweepTargets,
    pub shots_z: usize,
    pub shots_perp: usize,
    pub seed: u64,
    /// Alternating refinements of `perp_dephase` and `split_sigma`.
    pub rounds: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepAchieved {
    pub squeeze_db: f64,
    pub perp_std_ratio: f64,
    pub j_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub noise: NoiseModel,
    pub achieved: SweepAchieved,
    pub evaluations: usize,
}

struct Evaluator<'a> {
    cfg: &'a SweepConfig,
    fit: DetectionNoiseFit,
    baselines: BaselineCache,
    evaluations: usize,
}

impl Evaluator<'_> {
    fn run(&mut self, noise: &NoiseModel, shots_z: usize, shots_perp: usize) -> Result<BinSamples, SweepError> {
        self.evaluations += 1;
        let sampler = SamplerConfig {
            source: self.cfg.source,
            shots_z,
            shots_perp,
            seed: self.cfg.seed,
            exact_statevector_below: 0,
        };
        let shots = sample_campaign(&sampler, noise)?;
        Ok(BinSamples::from_shots(&shots, &self.fit))
    }

    fn squeeze(&mut self, noise: &NoiseModel) -> Result<f64, SweepError> {
        let samples = self.run(noise, self.cfg.shots_z, 2)?;
        let core = estimate_core(&samples, &self.fit, false).map_err(|e| SweepError::Estimate(e.to_string()))?;
        Ok(squeezing_db(core.var_jz_plus_corrected, core.n_mean).unwrap_or(f64::NEG_INFINITY))
    }

    /// `(J, perp std ratio)` from a perp-only campaign.
    fn transverse(&mut self, noise: &NoiseModel) -> Result<(f64, f64), SweepError> {
        let samples = self.run(noise, 2, self.cfg.shots_perp)?;
        let core = estimate_core(&samples, &self.fit, false).map_err(|e| SweepError::Estimate(e.to_string()))?;
        let baseline = self.baselines.perp_sq_mean(core.n_mean);
        Ok((
            0.5 * (core.j_norm_a + core.j_norm_b),
            (core.perp_sq_mean / baseline).sqrt(),
        ))
    }
}

/// Bisection for `f(x) = target` on `[lo, hi]`, `f` monotone in either direction.
fn bisect<F>(what: &'static str, target: f64, mut lo: f64, mut hi: f64, mut f: F) -> Result<f64, SweepError>
where
    F: FnMut(f64) -> Result<f64, SweepError>,
{
    let (f_lo, f_hi) = (f(lo)?, f(hi)?);
    let increasing = f_hi > f_lo;
    let (min, max) = if increasing { (f_lo, f_hi) } else { (f_hi, f_lo) };
    if !(min <= target && target <= max) {
        return Err(SweepError::Unreachable { what, target, lo: min, hi: max });
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if (f(mid)? < target) == increasing {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-7 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

pub fn sweep(cfg: &SweepConfig) -> Result<SweepResult, SweepError> {
    let mut eval = Evaluator {
        cfg,
        fit: DetectionNoiseFit::known(cfg.det_var_const, cfg.det_var_slope),
        baselines: BaselineCache::default(),
        evaluations: 0,
    };
    let mut noise = NoiseModel {
        det_var_const: cfg.det_var_const,
        det_var_slope: cfg.det_var_slope,
        ..NoiseModel::none()
    };

    noise.flip_prob = bisect("squeeze_db", cfg.targets.squeeze_db, 0.0, 0.25, |x| {
        eval.squeeze(&NoiseModel { flip_prob: x, ..noise })
    })?;

    for _ in 0..cfg.rounds.max(1) {
        noise.perp_dephase = bisect("j_norm", cfg.targets.j_norm, 0.0, 0.5, |x| {
            eval.transverse(&NoiseModel { perp_dephase: x, ..noise }).map(|t| t.0)
        })?;
        noise.split_sigma = bisect("perp_std_ratio", cfg.targets.perp_std_ratio, 0.0, 0.1, |x| {
            eval.transverse(&NoiseModel { split_sigma: x, ..noise }).map(|t| t.1)
        })?;
    }

    let squeeze_db = eval.squeeze(&noise)?;
    let (j_norm, perp_std_ratio) = eval.transverse(&noise)?;
    Ok(SweepResult {
        noise,
        achieved: SweepAchieved {
            squeeze_db,
            perp_std_ratio,
            j_norm,
        },
        evaluations: eval.evaluations,
    })
}
