//! Estimation pipeline: binning by total atom number, criterion estimators
//! with detection-noise subtraction, and bootstrap uncertainties.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{normal_cdf, sample_variance};
use crate::noise::CalibrationRecord;
use crate::observables::{f_bound, in_proof_domain, split_twin_fock_moments, squeezing_db};
use crate::rng::{substream, Domain};
use crate::sampler::{Basis, ShotRecord};

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    #[error("cloud {cloud} is empty in perp shot {shot_id}")]
    EmptyCloud { shot_id: u64, cloud: char },
    #[error("no calibration records")]
    EmptyCalibration,
    #[error("{0}")]
    Insufficient(String),
    #[error("no estimable bin: {}", .0.join("; "))]
    NoEstimableBins(Vec<String>),
    #[error("bin width must be at least 1, got {0}")]
    BinWidth(f64),
}

/// Spin values a shot contributes to the estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DerivedSpins {
    /// `(Jz^a, Jz^b)`.
    Z { jz_a: f64, jz_b: f64 },
    /// `(J⊥^a / j_a, J⊥^b / j_b)`.
    Perp { ra: f64, rb: f64 },
}

pub fn derive_spins(shot: &ShotRecord) -> Result<DerivedSpins, AnalysisError> {
    match shot.basis {
        Basis::Z => Ok(DerivedSpins::Z {
            jz_a: shot.spin_a(),
            jz_b: shot.spin_b(),
        }),
        Basis::Perp => {
            let (ja, jb) = (shot.j_a(), shot.j_b());
            if !(ja > 0.0) {
                return Err(AnalysisError::EmptyCloud { shot_id: shot.shot_id, cloud: 'a' });
            }
            if !(jb > 0.0) {
                return Err(AnalysisError::EmptyCloud { shot_id: shot.shot_id, cloud: 'b' });
            }
            Ok(DerivedSpins::Perp {
                ra: shot.spin_a() / ja,
                rb: shot.spin_b() / jb,
            })
        }
    }
}

/// Linear detection-noise model per mask: `var = det_var_const + det_var_slope * count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct DetectionNoiseFit {
    pub det_var_const: f64,
    pub det_var_slope: f64,
    /// Distinct calibration atom numbers behind the fit; 0 for a model given
    /// directly rather than fitted.
    pub grid_points: usize,
}

impl DetectionNoiseFit {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn known(det_var_const: f64, det_var_slope: f64) -> Self {
        Self {
            det_var_const,
            det_var_slope,
            grid_points: 0,
        }
    }

    /// Contribution to `Var(Jz^a + Jz^b)` at `n_total` atoms spread evenly
    /// over the four masks: `4 * (c + s N/4) / 4`.
    pub fn jz_plus_variance(&self, n_total: f64) -> f64 {
        self.det_var_const + self.det_var_slope * n_total / 4.0
    }

    /// Contribution to `Var(J⊥)` of a cloud with `n_cloud` atoms.
    pub fn cloud_spin_variance(&self, n_cloud: f64) -> f64 {
        (2.0 * self.det_var_const + self.det_var_slope * n_cloud.max(0.0)) / 4.0
    }
}

/// Least-squares line through the per-mask sample variance against the mask
/// count, one point per calibration atom number. A single atom number gives
/// a constant model.
pub fn fit_detection_noise(records: &[CalibrationRecord]) -> Result<DetectionNoiseFit, AnalysisError> {
    if records.is_empty() {
        return Err(AnalysisError::EmptyCalibration);
    }
    let mut groups: BTreeMap<u32, Vec<[f64; 4]>> = BTreeMap::new();
    for r in records {
        groups.entry(r.n_nominal).or_default().push(r.counts());
    }
    let mut points = Vec::with_capacity(groups.len());
    for (n, rows) in &groups {
        if rows.len() < 2 {
            return Err(AnalysisError::Insufficient(format!(
                "calibration point N={n} needs at least 2 records"
            )));
        }
        let v = (0..4)
            .map(|m| sample_variance(&rows.iter().map(|r| r[m]).collect::<Vec<_>>()).unwrap())
            .sum::<f64>()
            / 4.0;
        points.push((*n as f64 / 4.0, v));
    }
    let (c, s) = if points.len() == 1 {
        (points[0].1, 0.0)
    } else {
        let k = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
        let my = points.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let s = sxy / sxx;
        (my - s * mx, s)
    };
    Ok(DetectionNoiseFit {
        det_var_const: c.max(0.0),
        det_var_slope: s.max(0.0),
        grid_points: points.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub bin_width: f64,
    pub resamples: usize,
    pub seed: u64,
    /// Also subtract detection noise from the transverse estimators and use
    /// the corrected values in the criterion.
    pub correct_perp: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            bin_width: 1000.0,
            resamples: 10_000,
            seed: 0,
            correct_perp: false,
        }
    }
}

/// Per-shot values of one bin, ready for repeated estimation.
#[derive(Debug, Clone, Default)]
pub struct BinSamples {
    /// `(Jz^a + Jz^b, N)` per z shot.
    pub z: Vec<(f64, f64)>,
    pub perp: Vec<PerpSample>,
    pub perp_excluded: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct PerpSample {
    pub ra: f64,
    pub rb: f64,
    pub n_total: f64,
    /// Detection-noise variance of `ra` and `rb`.
    pub noise_a: f64,
    pub noise_b: f64,
}

impl BinSamples {
    pub fn from_shots<'a, I>(shots: I, fit: &DetectionNoiseFit) -> Self
    where
        I: IntoIterator<Item = &'a ShotRecord>,
    {
        let mut out = Self::default();
        for shot in shots {
            match derive_spins(shot) {
                Ok(DerivedSpins::Z { jz_a, jz_b }) => out.z.push((jz_a + jz_b, shot.n_total())),
                Ok(DerivedSpins::Perp { ra, rb }) => {
                    let (ja, jb) = (shot.j_a(), shot.j_b());
                    out.perp.push(PerpSample {
                        ra,
                        rb,
                        n_total: shot.n_total(),
                        noise_a: fit.cloud_spin_variance(2.0 * ja) / (ja * ja),
                        noise_b: fit.cloud_spin_variance(2.0 * jb) / (jb * jb),
                    });
                }
                Err(_) => out.perp_excluded += 1,
            }
        }
        out
    }

    pub fn n_mean(&self) -> f64 {
        let total: f64 = self.z.iter().map(|s| s.1).chain(self.perp.iter().map(|s| s.n_total)).sum();
        total / (self.z.len() + self.perp.len()) as f64
    }
}

/// Estimators recomputed for every bootstrap resample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoreEstimates {
    pub n_mean: f64,
    pub var_jz_plus_raw: f64,
    pub var_jz_plus_corrected: f64,
    pub clipped: bool,
    pub perp_sq_mean: f64,
    pub j_norm_a: f64,
    pub j_norm_b: f64,
    pub perp_sq_mean_corrected: f64,
    pub j_norm_a_corrected: f64,
    pub j_norm_b_corrected: f64,
    pub lhs: f64,
    pub rhs: f64,
}

pub fn estimate_core(samples: &BinSamples, fit: &DetectionNoiseFit, correct_perp: bool) -> Result<CoreEstimates, AnalysisError> {
    if samples.z.is_empty() {
        return Err(AnalysisError::Insufficient("no z-basis shots in bin".into()));
    }
    if samples.perp.is_empty() {
        return Err(AnalysisError::Insufficient("no perp-basis shots in bin".into()));
    }
    if samples.z.len() < 2 || samples.perp.len() < 2 {
        return Err(AnalysisError::Insufficient(format!(
            "need at least 2 shots per basis, have {} z and {} perp",
            samples.z.len(),
            samples.perp.len()
        )));
    }
    let n_mean = samples.n_mean();
    let jz: Vec<f64> = samples.z.iter().map(|s| s.0).collect();
    let raw = sample_variance(&jz).expect("two or more shots");
    let shifted = raw - fit.jz_plus_variance(n_mean);
    let clipped = shifted < 0.0;
    let corrected = shifted.max(0.0);

    let k = samples.perp.len() as f64;
    let ja2 = 2.0 * samples.perp.iter().map(|s| s.ra * s.ra).sum::<f64>() / k;
    let jb2 = 2.0 * samples.perp.iter().map(|s| s.rb * s.rb).sum::<f64>() / k;
    let (ja, jb) = (ja2.sqrt(), jb2.sqrt());
    let perp = perp_sq(samples, ja, jb);

    let ja2_c = (ja2 - 2.0 * samples.perp.iter().map(|s| s.noise_a).sum::<f64>() / k).max(0.0);
    let jb2_c = (jb2 - 2.0 * samples.perp.iter().map(|s| s.noise_b).sum::<f64>() / k).max(0.0);
    let (ja_c, jb_c) = (ja2_c.sqrt(), jb2_c.sqrt());
    let perp_c = if ja_c > 0.0 && jb_c > 0.0 {
        let noise: f64 = samples
            .perp
            .iter()
            .map(|s| s.noise_a / ja2_c + s.noise_b / jb2_c)
            .sum::<f64>()
            / k;
        (perp_sq(samples, ja_c, jb_c) - 2.0 * noise).max(0.0)
    } else {
        f64::NAN
    };

    let (p, a, b) = if correct_perp { (perp_c, ja_c, jb_c) } else { (perp, ja, jb) };
    let lhs = (corrected + 0.5) * p;
    let rhs = f_bound(a, b).unwrap_or(f64::NAN);
    Ok(CoreEstimates {
        n_mean,
        var_jz_plus_raw: raw,
        var_jz_plus_corrected: corrected,
        clipped,
        perp_sq_mean: perp,
        j_norm_a: ja,
        j_norm_b: jb,
        perp_sq_mean_corrected: perp_c,
        j_norm_a_corrected: ja_c,
        j_norm_b_corrected: jb_c,
        lhs,
        rhs,
    })
}

fn perp_sq(samples: &BinSamples, ja: f64, jb: f64) -> f64 {
    if !(ja > 0.0 && jb > 0.0) {
        return f64::NAN;
    }
    2.0 * samples
        .perp
        .iter()
        .map(|s| (s.ra / ja - s.rb / jb).powi(2))
        .sum::<f64>()
        / samples.perp.len() as f64
}

mod neg_inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NEG_INFINITY))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinEstimates {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub n_mean: f64,
    pub shots_z: usize,
    pub shots_perp: usize,
    pub perp_excluded: usize,
    pub var_jz_plus_raw: f64,
    pub var_jz_plus_corrected: f64,
    /// Set when the subtraction would have gone negative.
    pub clipped: bool,
    /// Shot-noise variance `N/4`.
    pub shot_noise: f64,
    /// `-inf` (written as `null`) for a vanishing corrected variance.
    #[serde(with = "neg_inf_as_null")]
    pub squeeze_db: f64,
    pub perp_sq_mean: f64,
    pub j_norm_a: f64,
    pub j_norm_b: f64,
    pub perp_sq_mean_corrected: f64,
    pub j_norm_a_corrected: f64,
    pub j_norm_b_corrected: f64,
    /// Exact noiseless split twin-Fock value at the bin's mean atom number.
    pub baseline_perp_sq_mean: f64,
    /// `sqrt(perp_sq_mean / baseline_perp_sq_mean)`.
    pub perp_std_ratio: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub violated: bool,
    pub in_proof_domain: bool,
}

/// Baselines keyed by pair number, shared across bins.
#[derive(Debug, Default)]
pub struct BaselineCache(HashMap<u32, f64>);

impl BaselineCache {
    pub fn perp_sq_mean(&mut self, n_mean: f64) -> f64 {
        let n_pairs = (n_mean / 2.0).round().max(1.0) as u32;
        *self
            .0
            .entry(n_pairs)
            .or_insert_with(|| split_twin_fock_moments(n_pairs).map(|m| m.perp_sq_mean).unwrap_or(f64::NAN))
    }
}

pub fn estimate_bin(
    samples: &BinSamples,
    bounds: (f64, f64),
    fit: &DetectionNoiseFit,
    correct_perp: bool,
    baselines: &mut BaselineCache,
) -> Result<BinEstimates, AnalysisError> {
    let core = estimate_core(samples, fit, correct_perp)?;
    let baseline = baselines.perp_sq_mean(core.n_mean);
    let (a, b) = if correct_perp {
        (core.j_norm_a_corrected, core.j_norm_b_corrected)
    } else {
        (core.j_norm_a, core.j_norm_b)
    };
    Ok(BinEstimates {
        bin_lo: bounds.0,
        bin_hi: bounds.1,
        n_mean: core.n_mean,
        shots_z: samples.z.len(),
        shots_perp: samples.perp.len(),
        perp_excluded: samples.perp_excluded,
        var_jz_plus_raw: core.var_jz_plus_raw,
        var_jz_plus_corrected: core.var_jz_plus_corrected,
        clipped: core.clipped,
        shot_noise: core.n_mean / 4.0,
        squeeze_db: squeezing_db(core.var_jz_plus_corrected, core.n_mean.max(f64::MIN_POSITIVE)).unwrap_or(f64::NAN),
        perp_sq_mean: core.perp_sq_mean,
        j_norm_a: core.j_norm_a,
        j_norm_b: core.j_norm_b,
        perp_sq_mean_corrected: core.perp_sq_mean_corrected,
        j_norm_a_corrected: core.j_norm_a_corrected,
        j_norm_b_corrected: core.j_norm_b_corrected,
        baseline_perp_sq_mean: baseline,
        perp_std_ratio: (core.perp_sq_mean / baseline).sqrt(),
        lhs: core.lhs,
        rhs: core.rhs,
        violated: core.lhs < core.rhs,
        in_proof_domain: in_proof_domain(a, b),
    })
}

/// Bootstrap standard deviations; `None` when fewer than two resamples
/// produced a finite value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct EstimatorStds {
    pub var_jz_plus_corrected: Option<f64>,
    pub squeeze_db: Option<f64>,
    pub perp_sq_mean: Option<f64>,
    pub perp_std_ratio: Option<f64>,
    pub j_norm_a: Option<f64>,
    pub j_norm_b: Option<f64>,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub margin: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub resamples: usize,
    pub std: EstimatorStds,
    /// `(rhs - lhs) / std(rhs - lhs)` at the point estimate.
    pub significance: Option<f64>,
    /// Fraction of resamples with `lhs < rhs`.
    pub violation_fraction: f64,
    /// `Φ(significance)`, the fraction expected for Gaussian spread.
    pub normal_fraction: Option<f64>,
}

fn resample<T: Copy, R: Rng + ?Sized>(items: &[T], rng: &mut R) -> Vec<T> {
    (0..items.len()).map(|_| items[rng.random_range(0..items.len())]).collect()
}

fn std_of(values: impl Iterator<Item = f64>) -> Option<f64> {
    let v: Vec<f64> = values.collect();
    if v.iter().any(|x| !x.is_finite()) {
        return None;
    }
    sample_variance(&v).map(f64::sqrt)
}

/// Resample each basis group with replacement and re-estimate. Resample `r`
/// uses the `Bootstrap` substream `r` of `seed`, so the result does not
/// depend on scheduling.
pub fn bootstrap(
    samples: &BinSamples,
    point: &BinEstimates,
    resamples: usize,
    fit: &DetectionNoiseFit,
    correct_perp: bool,
    seed: u64,
) -> Result<BootstrapReport, AnalysisError> {
    estimate_core(samples, fit, correct_perp)?;
    let runs: Vec<CoreEstimates> = (0..resamples)
        .into_par_iter()
        .filter_map(|r| {
            let mut rng = substream(seed, Domain::Bootstrap, r as u64);
            let drawn = BinSamples {
                z: resample(&samples.z, &mut rng),
                perp: resample(&samples.perp, &mut rng),
                perp_excluded: samples.perp_excluded,
            };
            estimate_core(&drawn, fit, correct_perp).ok()
        })
        .collect();

    let baseline = point.baseline_perp_sq_mean;
    let (ja, jb): (fn(&CoreEstimates) -> f64, fn(&CoreEstimates) -> f64) = if correct_perp {
        (|c| c.j_norm_a_corrected, |c| c.j_norm_b_corrected)
    } else {
        (|c| c.j_norm_a, |c| c.j_norm_b)
    };
    let std = EstimatorStds {
        var_jz_plus_corrected: std_of(runs.iter().map(|c| c.var_jz_plus_corrected)),
        squeeze_db: std_of(runs.iter().map(|c| squeezing_db(c.var_jz_plus_corrected, c.n_mean).unwrap_or(f64::NAN))),
        perp_sq_mean: std_of(runs.iter().map(|c| c.perp_sq_mean)),
        perp_std_ratio: std_of(runs.iter().map(|c| (c.perp_sq_mean / baseline).sqrt())),
        j_norm_a: std_of(runs.iter().map(ja)),
        j_norm_b: std_of(runs.iter().map(jb)),
        lhs: std_of(runs.iter().map(|c| c.lhs)),
        rhs: std_of(runs.iter().map(|c| c.rhs)),
        margin: std_of(runs.iter().map(|c| c.rhs - c.lhs)),
    };
    let significance = std
        .margin
        .filter(|s| *s > 0.0)
        .map(|s| (point.rhs - point.lhs) / s);
    let violation_fraction = if runs.is_empty() {
        0.0
    } else {
        runs.iter().filter(|c| c.lhs < c.rhs).count() as f64 / runs.len() as f64
    };
    Ok(BootstrapReport {
        resamples: runs.len(),
        std,
        significance,
        violation_fraction,
        normal_fraction: significance.map(normal_cdf),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinResult {
    pub estimates: BinEstimates,
    pub bootstrap: BootstrapReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedBin {
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub config: AnalysisConfig,
    pub noise_fit: DetectionNoiseFit,
    pub bins: Vec<BinResult>,
    pub skipped: Vec<SkippedBin>,
}

/// Group shots into bins `[k w, (k + 1) w)` of total atom number.
pub fn bin_shots(shots: &[ShotRecord], width: f64) -> Result<BTreeMap<i64, Vec<&ShotRecord>>, AnalysisError> {
    if !(width >= 1.0) {
        return Err(AnalysisError::BinWidth(width));
    }
    let mut bins: BTreeMap<i64, Vec<&ShotRecord>> = BTreeMap::new();
    for s in shots {
        bins.entry((s.n_total() / width).floor() as i64).or_default().push(s);
    }
    Ok(bins)
}

pub fn analyze(shots: &[ShotRecord], fit: &DetectionNoiseFit, cfg: &AnalysisConfig) -> Result<AnalysisReport, AnalysisError> {
    let mut baselines = BaselineCache::default();
    let mut bins = Vec::new();
    let mut skipped = Vec::new();
    for (k, members) in bin_shots(shots, cfg.bin_width)? {
        let bounds = (k as f64 * cfg.bin_width, (k + 1) as f64 * cfg.bin_width);
        let samples = BinSamples::from_shots(members, fit);
        let result = estimate_bin(&samples, bounds, fit, cfg.correct_perp, &mut baselines).and_then(|estimates| {
            // each bin draws from its own seed so bins stay independent
            let seed = cfg.seed.wrapping_add(k as u64);
            let bootstrap = bootstrap(&samples, &estimates, cfg.resamples, fit, cfg.correct_perp, seed)?;
            Ok(BinResult { estimates, bootstrap })
        });
        match result {
            Ok(r) => bins.push(r),
            Err(e) => skipped.push(SkippedBin {
                bin_lo: bounds.0,
                bin_hi: bounds.1,
                reason: e.to_string(),
            }),
        }
    }
    if bins.is_empty() {
        return Err(AnalysisError::NoEstimableBins(
            skipped
                .iter()
                .map(|s| format!("[{}, {}): {}", s.bin_lo, s.bin_hi, s.reason))
                .collect(),
        ));
    }
    Ok(AnalysisReport {
        config: *cfg,
        noise_fit: *fit,
        bins,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::{make_calibration_records, NoiseModel};

    fn shot(id: u64, basis: Basis, c: [f64; 4]) -> ShotRecord {
        ShotRecord {
            shot_id: id,
            basis,
            na_plus: c[0],
            na_minus: c[1],
            nb_plus: c[2],
            nb_minus: c[3],
            phase: (basis == Basis::Perp).then_some(0.0),
        }
    }

    #[test]
    fn derive_spins_examples() {
        assert_eq!(
            derive_spins(&shot(0, Basis::Z, [10.0; 4])).unwrap(),
            DerivedSpins::Z { jz_a: 0.0, jz_b: 0.0 }
        );
        assert_eq!(
            derive_spins(&shot(0, Basis::Perp, [20.0, 0.0, 0.0, 20.0])).unwrap(),
            DerivedSpins::Perp { ra: 1.0, rb: -1.0 }
        );
        assert!(derive_spins(&shot(3, Basis::Perp, [0.0, 0.0, 1.0, 1.0])).is_err());
        // z shots never need a spin length
        assert!(derive_spins(&shot(4, Basis::Z, [0.0, 0.0, 1.0, 1.0])).is_ok());
    }

    #[test]
    fn identical_shots_give_zero_variances() {
        let shots: Vec<ShotRecord> = (0..10)
            .map(|i| shot(i, if i % 2 == 0 { Basis::Z } else { Basis::Perp }, [30.0, 20.0, 20.0, 30.0]))
            .collect();
        let samples = BinSamples::from_shots(&shots, &DetectionNoiseFit::zero());
        let est = estimate_bin(&samples, (0.0, 1000.0), &DetectionNoiseFit::zero(), false, &mut BaselineCache::default()).unwrap();
        assert_eq!(est.var_jz_plus_raw, 0.0);
        assert_eq!(est.squeeze_db, f64::NEG_INFINITY);
        assert!(est.rhs.is_finite());
        // ra = 0.2, rb = -0.2, J = 0.2 sqrt 2, so each normalized spin is ±1/sqrt 2
        assert!((est.perp_sq_mean - 4.0).abs() < 1e-12);
    }

    #[test]
    fn missing_basis_is_reported() {
        let shots: Vec<ShotRecord> = (0..5).map(|i| shot(i, Basis::Perp, [3.0, 2.0, 2.0, 3.0])).collect();
        let err = analyze(&shots, &DetectionNoiseFit::zero(), &AnalysisConfig::default()).unwrap_err();
        assert!(err.to_string().contains("no z-basis shots in bin"), "{err}");
    }

    #[test]
    fn subtraction_is_floored_and_flagged() {
        let shots: Vec<ShotRecord> = (0..6)
            .map(|i| shot(i, if i % 2 == 0 { Basis::Z } else { Basis::Perp }, [30.0 + i as f64, 20.0, 20.0, 30.0]))
            .collect();
        let fit = DetectionNoiseFit::known(1.0e3, 0.0);
        let est = estimate_bin(&BinSamples::from_shots(&shots, &fit), (0.0, 1.0e3), &fit, false, &mut BaselineCache::default()).unwrap();
        assert!(est.clipped);
        assert_eq!(est.var_jz_plus_corrected, 0.0);
        assert!(est.var_jz_plus_corrected <= est.var_jz_plus_raw);
    }

    #[test]
    fn noise_fit_fallbacks() {
        let clean = make_calibration_records(&NoiseModel::none(), &[1000, 3000], 20, 1).unwrap();
        let fit = fit_detection_noise(&clean).unwrap();
        assert_eq!((fit.det_var_const, fit.det_var_slope), (0.0, 0.0));
        let model = NoiseModel { det_var_const: 4.0, det_var_slope: 0.01, ..NoiseModel::none() };
        let single = make_calibration_records(&model, &[2000], 2000, 1).unwrap();
        let fit = fit_detection_noise(&single).unwrap();
        assert_eq!(fit.det_var_slope, 0.0);
        assert!((fit.det_var_const / 9.0 - 1.0).abs() < 0.1, "{fit:?}");
        assert_eq!(fit_detection_noise(&[]), Err(AnalysisError::EmptyCalibration));
    }

    #[test]
    fn bootstrap_with_one_resample_has_no_spread() {
        let shots: Vec<ShotRecord> = (0..40)
            .map(|i| {
                let k = (i % 7) as f64;
                shot(i, if i % 2 == 0 { Basis::Z } else { Basis::Perp }, [30.0 + k, 20.0 - k, 20.0 + k, 30.0 - k])
            })
            .collect();
        let fit = DetectionNoiseFit::zero();
        let cfg = AnalysisConfig { resamples: 1, ..AnalysisConfig::default() };
        let report = analyze(&shots, &fit, &cfg).unwrap();
        let b = report.bins[0].bootstrap;
        assert_eq!(b.std.lhs, None);
        assert_eq!(b.significance, None);
        assert!((0.0..=1.0).contains(&b.violation_fraction));
    }

    #[test]
    fn negative_infinity_round_trips_through_json() {
        let shots: Vec<ShotRecord> = (0..10)
            .map(|i| shot(i, if i % 2 == 0 { Basis::Z } else { Basis::Perp }, [30.0, 20.0, 20.0, 30.0]))
            .collect();
        let est = estimate_bin(&BinSamples::from_shots(&shots, &DetectionNoiseFit::zero()), (0.0, 1.0e3), &DetectionNoiseFit::zero(), false, &mut BaselineCache::default()).unwrap();
        let json = serde_json::to_string(&est).unwrap();
        assert!(json.contains("\"squeeze_db\":null"));
        let back: BinEstimates = serde_json::from_str(&json).unwrap();
        assert_eq!(back.squeeze_db, f64::NEG_INFINITY);
    }
}
