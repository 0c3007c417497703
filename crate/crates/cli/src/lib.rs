//! Subcommands of the `twinsplit` binary, callable in-process.
//!
//! Parameters come from three layers, later ones winning: an optional preset,
//! a TOML file whose keys are the long flag names with `_` for `-`, and the
//! command-line flags themselves.

use std::fs;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use twinsplit::analysis::{analyze, fit_detection_noise, AnalysisConfig, AnalysisReport};
use twinsplit::io::{self, read_calibration_file, read_shots_file, write_calibration_file, write_shots_file};
use twinsplit::noise::make_calibration_records;
use twinsplit::oracle::{run_verification, DerivationReport, VerifyConfig};
use twinsplit::sampler::sample_campaign;
use twinsplit::sweep::{sweep, SweepConfig, SweepResult, SweepTargets};
use twinsplit::{DetectionNoiseFit, NoiseModel, SamplerConfig, Source, SqueezedSourceParams};

/// Every tunable parameter; `None` means "not set at this layer".
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Master seed.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots_z: Option<usize>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shots_perp: Option<usize>,
    /// Mean total atom number of the Gaussian source.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_mean: Option<f64>,
    /// Spread of the total atom number across shots.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_sigma: Option<f64>,
    /// Squeezing strength; selects the squeezed-vacuum pair distribution
    /// instead of the Gaussian source.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi: Option<f64>,
    /// Detection variance per mask, constant part.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub det_var_const: Option<f64>,
    /// Detection variance per mask, per detected atom.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub det_var_slope: Option<f64>,
    /// Spread of the per-spin splitting ratio around 1/2.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub split_sigma: Option<f64>,
    /// Probability that an atom is counted in the wrong spin component.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flip_prob: Option<f64>,
    /// Fraction of atoms whose transverse phase is randomized in perp shots.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perp_dephase: Option<f64>,
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bin_width: Option<f64>,
    /// Bootstrap resamples per bin.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bootstrap: Option<usize>,
    /// Also correct the transverse estimators for detection noise.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub correct_perp: Option<bool>,
}

macro_rules! layer {
    ($top:expr, $base:expr, $($f:ident),*) => {
        Params { $($f: $top.$f.or($base.$f)),* }
    };
}

impl Params {
    /// `self` over `base`.
    pub fn over(&self, base: &Params) -> Params {
        layer!(
            self, base, seed, shots_z, shots_perp, n_mean, n_sigma, xi, det_var_const, det_var_slope, split_sigma,
            flip_prob, perp_dephase, bin_width, bootstrap, correct_perp
        )
    }

    pub fn from_toml_file(path: &Path) -> Result<Params> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// Campaign at mean `N = 3460` with the noise budget found by
/// `twinsplit --preset paper --seed 1 sweep` (200,000 tuning shots per basis).
pub fn paper_preset() -> Params {
    Params {
        shots_z: Some(506),
        shots_perp: Some(487),
        n_mean: Some(3460.0),
        n_sigma: Some(150.0),
        det_var_const: Some(PAPER_DET_VAR_CONST),
        det_var_slope: Some(PAPER_DET_VAR_SLOPE),
        split_sigma: Some(0.01853),
        flip_prob: Some(0.02033),
        perp_dephase: Some(0.02045),
        ..Params::default()
    }
}

/// Detection noise of the paper preset. Its `Var(Jz^+)` share at `N = 3460`,
/// `c + s N / 4`, equals the corrected variance at -11 dB, so 506 z shots
/// give the squeezing to about ±0.5 dB.
pub const PAPER_DET_VAR_CONST: f64 = 35.0;
pub const PAPER_DET_VAR_SLOPE: f64 = 0.04;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Preset {
    Paper,
}

/// Fully resolved parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Resolved {
    pub seed: u64,
    pub shots_z: usize,
    pub shots_perp: usize,
    pub source: Source,
    pub noise: NoiseModel,
    pub analysis: AnalysisConfig,
    /// Detection noise was configured explicitly.
    pub det_var_given: bool,
}

pub fn resolve(flags: &Params, config: Option<&Path>, preset: Option<Preset>) -> Result<Resolved> {
    let mut p = flags.clone();
    if let Some(path) = config {
        p = p.over(&Params::from_toml_file(path)?);
    }
    if let Some(Preset::Paper) = preset {
        p = p.over(&paper_preset());
    }
    let seed = p.seed.unwrap_or(0);
    let source = match p.xi {
        Some(xi) => Source::Squeezed(SqueezedSourceParams::from_xi(xi, SqueezedSourceParams::minimal_cutoff(xi))),
        None => Source::Gaussian {
            n_mean: p.n_mean.unwrap_or(3460.0),
            n_sigma: p.n_sigma.unwrap_or(0.0),
        },
    };
    let noise = NoiseModel {
        det_var_const: p.det_var_const.unwrap_or(0.0),
        det_var_slope: p.det_var_slope.unwrap_or(0.0),
        split_sigma: p.split_sigma.unwrap_or(0.0),
        flip_prob: p.flip_prob.unwrap_or(0.0),
        perp_dephase: p.perp_dephase.unwrap_or(0.0),
        ..NoiseModel::none()
    };
    noise.validate()?;
    let analysis = AnalysisConfig {
        bin_width: p.bin_width.unwrap_or(1000.0),
        resamples: p.bootstrap.unwrap_or(10_000),
        seed,
        correct_perp: p.correct_perp.unwrap_or(false),
    };
    ensure!(analysis.bin_width >= 1.0, "bin width must be at least 1");
    ensure!(analysis.resamples >= 1, "bootstrap resamples must be at least 1");
    Ok(Resolved {
        seed,
        shots_z: p.shots_z.unwrap_or(506),
        shots_perp: p.shots_perp.unwrap_or(487),
        source,
        noise,
        analysis,
        det_var_given: p.det_var_const.is_some() || p.det_var_slope.is_some(),
    })
}

impl Resolved {
    pub fn sampler(&self) -> SamplerConfig {
        SamplerConfig {
            source: self.source,
            shots_z: self.shots_z,
            shots_perp: self.shots_perp,
            seed: self.seed,
            exact_statevector_below: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationPlan {
    pub grid: Vec<u32>,
    pub shots_per_point: usize,
}

impl Default for CalibrationPlan {
    fn default() -> Self {
        Self {
            grid: vec![1000, 2000, 3000, 4000, 5000],
            shots_per_point: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulateSummary {
    pub shots_z: usize,
    pub shots_perp: usize,
    pub mean_total: f64,
    pub calibration_records: usize,
}

/// Write a shot file, and optionally a calibration file from the same noise
/// model.
pub fn cmd_simulate(
    r: &Resolved,
    out: &Path,
    calibration: Option<(&Path, &CalibrationPlan)>,
) -> Result<SimulateSummary> {
    let shots = sample_campaign(&r.sampler(), &r.noise)?;
    write_shots_file(out, &shots)?;
    let mut calibration_records = 0;
    if let Some((path, plan)) = calibration {
        let records = make_calibration_records(&r.noise, &plan.grid, plan.shots_per_point, r.seed)?;
        write_calibration_file(path, &records)?;
        calibration_records = records.len();
    }
    let mean_total = if shots.is_empty() {
        0.0
    } else {
        shots.iter().map(|s| s.n_total()).sum::<f64>() / shots.len() as f64
    };
    Ok(SimulateSummary {
        shots_z: r.shots_z,
        shots_perp: r.shots_perp,
        mean_total,
        calibration_records,
    })
}

/// Where the detection-noise model used by `analyze` came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitSource {
    Calibration,
    Configured,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultsDoc {
    pub fit_source: FitSource,
    #[serde(flatten)]
    pub report: AnalysisReport,
}

pub const RESULTS_FILE: &str = "results.json";

/// Analyze a shot file into `out_dir/results.json` and the figure tables.
/// Detection noise is fitted from `calibration` when given, else taken from
/// the configured parameters, else assumed absent.
pub fn cmd_analyze(r: &Resolved, shots: &Path, calibration: Option<&Path>, out_dir: &Path) -> Result<ResultsDoc> {
    let shots = read_shots_file(shots)?;
    let (fit, fit_source) = match calibration {
        Some(path) => (fit_detection_noise(&read_calibration_file(path)?)?, FitSource::Calibration),
        None if r.det_var_given => (
            DetectionNoiseFit::known(r.noise.det_var_const, r.noise.det_var_slope),
            FitSource::Configured,
        ),
        None => (DetectionNoiseFit::zero(), FitSource::None),
    };
    let report = analyze(&shots, &fit, &r.analysis)?;
    fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let doc = ResultsDoc { fit_source, report };
    io::write_json_file(&out_dir.join(RESULTS_FILE), &doc)?;
    io::write_figure_tables(out_dir, &doc.report)?;
    Ok(doc)
}

pub fn verify_config(seed: u64, quick: bool, tolerance: Option<f64>) -> VerifyConfig {
    let mut cfg = if quick { VerifyConfig::quick(seed) } else { VerifyConfig::full(seed) };
    if let Some(t) = tolerance {
        cfg.tolerance = t;
    }
    cfg
}

pub fn cmd_verify(cfg: &VerifyConfig, out: Option<&Path>) -> Result<DerivationReport> {
    let report = run_verification(cfg);
    if let Some(path) = out {
        io::write_json_file(path, &report)?;
    }
    Ok(report)
}

pub fn format_verify_report(report: &DerivationReport) -> String {
    let mut s = format!("{:<32} {:<18} {:>8} {:>14}  status\n", "check", "domain", "states", "min margin");
    for c in &report.checks {
        let status = match (c.passed, c.informational) {
            (true, _) => "ok",
            (false, true) => "violated (informational)",
            (false, false) => "FAILED",
        };
        let margin = c.min_margin.map_or("-".to_string(), |m| format!("{m:.3e}"));
        s += &format!("{:<32} {:<18} {:>8} {:>14}  {status}\n", c.name, c.domain, c.evaluated, margin);
    }
    for w in &report.witness {
        s += &format!(
            "witness N={:<4} lhs={:.6} rhs={:.6} {}\n",
            w.n_total,
            w.lhs,
            w.rhs,
            if w.fires { "fires" } else { "DOES NOT FIRE" }
        );
    }
    s
}

/// Sweep result written back as a config file usable with `--config`.
#[derive(Debug, Clone, PartialEq, Serialize)]
struct SweepFile {
    #[serde(flatten)]
    params: Params,
    achieved_squeeze_db: f64,
    achieved_perp_std_ratio: f64,
    achieved_j_norm: f64,
}

pub fn sweep_params(r: &Resolved, result: &SweepResult) -> Params {
    let (n_mean, n_sigma, xi) = match r.source {
        Source::Gaussian { n_mean, n_sigma } => (Some(n_mean), Some(n_sigma), None),
        Source::Fixed { n_pairs } => (Some(2.0 * n_pairs as f64), Some(0.0), None),
        Source::Squeezed(p) => (None, None, Some(p.xi)),
    };
    Params {
        seed: Some(r.seed),
        shots_z: Some(r.shots_z),
        shots_perp: Some(r.shots_perp),
        n_mean,
        n_sigma,
        xi,
        det_var_const: Some(result.noise.det_var_const),
        det_var_slope: Some(result.noise.det_var_slope),
        split_sigma: Some(result.noise.split_sigma),
        flip_prob: Some(result.noise.flip_prob),
        perp_dephase: Some(result.noise.perp_dephase),
        ..Params::default()
    }
}

/// Tune `flip_prob`, `perp_dephase` and `split_sigma` to the targets with
/// `tuning_shots` shots per basis, keeping detection noise and the source
/// fixed. The written config keeps the campaign's own shot counts.
pub fn cmd_sweep(r: &Resolved, targets: SweepTargets, tuning_shots: usize, rounds: usize, out: Option<&Path>) -> Result<SweepResult> {
    let cfg = SweepConfig {
        source: r.source,
        det_var_const: r.noise.det_var_const,
        det_var_slope: r.noise.det_var_slope,
        targets,
        shots_z: tuning_shots,
        shots_perp: tuning_shots,
        seed: r.seed,
        rounds,
    };
    let result = sweep(&cfg)?;
    if let Some(path) = out {
        let file = SweepFile {
            params: sweep_params(r, &result),
            achieved_squeeze_db: result.achieved.squeeze_db,
            achieved_perp_std_ratio: result.achieved.perp_std_ratio,
            achieved_j_norm: result.achieved.j_norm,
        };
        let text = toml::to_string(&file)?;
        // achieved_* keys are informational; strip them so the file loads as a config
        let body: String = text
            .lines()
            .map(|l| if l.starts_with("achieved_") { format!("# {l}\n") } else { format!("{l}\n") })
            .collect();
        fs::write(path, body).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(result)
}

/// Parse `1000,2000,3000`.
pub fn parse_grid(s: &str) -> Result<Vec<u32>> {
    let grid: Vec<u32> = s
        .split(',')
        .map(|t| t.trim().parse::<u32>().with_context(|| format!("bad grid value {t:?}")))
        .collect::<Result<_>>()?;
    if grid.is_empty() {
        bail!("empty calibration grid");
    }
    Ok(grid)
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_file_beat_preset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.toml");
        fs::write(&path, "shots_z = 11\nflip_prob = 0.1\n").unwrap();
        let flags = Params {
            flip_prob: Some(0.2),
            ..Params::default()
        };
        let r = resolve(&flags, Some(&path), Some(Preset::Paper)).unwrap();
        assert_eq!(r.noise.flip_prob, 0.2);
        assert_eq!(r.shots_z, 11);
        assert_eq!(r.shots_perp, 487);
        assert_eq!(r.noise.det_var_const, PAPER_DET_VAR_CONST);
        assert!(r.det_var_given);
    }

    #[test]
    fn defaults_are_noiseless() {
        let r = resolve(&Params::default(), None, None).unwrap();
        assert_eq!(r.noise, NoiseModel::none());
        assert!(!r.det_var_given);
        assert_eq!(r.source, Source::Gaussian { n_mean: 3460.0, n_sigma: 0.0 });
    }

    #[test]
    fn invalid_noise_is_rejected() {
        let flags = Params {
            flip_prob: Some(1.5),
            ..Params::default()
        };
        assert!(resolve(&flags, None, None).is_err());
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("1000, 2000,3000").unwrap(), vec![1000, 2000, 3000]);
        assert!(parse_grid("1000,x").is_err());
        assert!(parse_grid("").is_err());
    }
}
