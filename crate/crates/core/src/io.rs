//! File formats: shot and calibration CSV, versioned JSON documents, and the
//! plot-ready figure tables.
//!
//! CSV files carry no version field of their own; the exact header line is
//! the version, and readers reject any other header. JSON documents carry a
//! `schema_version` of the form `major.minor` and readers reject an unknown
//! major.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{AnalysisReport, BinResult, DetectionNoiseFit};
use crate::noise::CalibrationRecord;
use crate::observables::split_twin_fock_moments;
use crate::sampler::ShotRecord;

pub const SCHEMA_VERSION: &str = "1.0";
pub const SCHEMA_MAJOR: u32 = 1;

pub const SHOT_HEADER: [&str; 7] = ["shot_id", "basis", "na_plus", "na_minus", "nb_plus", "nb_minus", "phase"];
pub const CALIBRATION_HEADER: [&str; 6] = ["shot_id", "n_nominal", "na_plus", "na_minus", "nb_plus", "nb_minus"];

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("unexpected header {found:?}, expected {expected:?}")]
    Header { found: Vec<String>, expected: Vec<String> },
    #[error("unsupported schema_version {0:?} (this build reads {SCHEMA_MAJOR}.x)")]
    Schema(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn open(path: &Path) -> Result<BufReader<File>, IoError> {
    File::open(path).map(BufReader::new).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

fn create(path: &Path) -> Result<BufWriter<File>, IoError> {
    File::create(path).map(BufWriter::new).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

fn write_rows<W: Write, T: Serialize>(out: W, header: &[&str], rows: &[T]) -> Result<(), IoError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

fn read_rows<R: Read, T: DeserializeOwned>(input: R, header: &[&str]) -> Result<Vec<T>, IoError> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let found = r.headers()?.clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(IoError::Header {
            found: found.iter().map(str::to_string).collect(),
            expected: header.iter().map(|s| s.to_string()).collect(),
        });
    }
    let mut rows = Vec::new();
    for result in r.records() {
        let record = result.map_err(|e| IoError::Malformed {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let row = record.deserialize(Some(&found)).map_err(|e| IoError::Malformed {
            line,
            message: e.to_string(),
        })?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn write_shots<W: Write>(out: W, shots: &[ShotRecord]) -> Result<(), IoError> {
    write_rows(out, &SHOT_HEADER, shots)
}

/// Parse a shot file. Counts must be finite and nonnegative, and perp shots
/// must carry a phase.
pub fn read_shots<R: Read>(input: R) -> Result<Vec<ShotRecord>, IoError> {
    let shots: Vec<ShotRecord> = read_rows(input, &SHOT_HEADER)?;
    for (i, s) in shots.iter().enumerate() {
        // header is line 1
        let line = i as u64 + 2;
        if s.counts().iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(IoError::Malformed {
                line,
                message: "counts must be finite and nonnegative".into(),
            });
        }
        if s.basis == crate::sampler::Basis::Perp && !s.phase.is_some_and(f64::is_finite) {
            return Err(IoError::Malformed {
                line,
                message: "perp shot without a finite phase".into(),
            });
        }
    }
    Ok(shots)
}

pub fn write_shots_file(path: &Path, shots: &[ShotRecord]) -> Result<(), IoError> {
    let mut f = create(path)?;
    write_shots(&mut f, shots)?;
    f.flush()?;
    Ok(())
}

pub fn read_shots_file(path: &Path) -> Result<Vec<ShotRecord>, IoError> {
    read_shots(open(path)?)
}

pub fn write_calibration<W: Write>(out: W, records: &[CalibrationRecord]) -> Result<(), IoError> {
    write_rows(out, &CALIBRATION_HEADER, records)
}

pub fn read_calibration<R: Read>(input: R) -> Result<Vec<CalibrationRecord>, IoError> {
    read_rows(input, &CALIBRATION_HEADER)
}

pub fn write_calibration_file(path: &Path, records: &[CalibrationRecord]) -> Result<(), IoError> {
    let mut f = create(path)?;
    write_calibration(&mut f, records)?;
    f.flush()?;
    Ok(())
}

pub fn read_calibration_file(path: &Path) -> Result<Vec<CalibrationRecord>, IoError> {
    read_calibration(open(path)?)
}

/// A JSON document tagged with `schema_version`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versioned<T> {
    pub schema_version: String,
    #[serde(flatten)]
    pub body: T,
}

impl<T> Versioned<T> {
    pub fn new(body: T) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.to_string(),
            body,
        }
    }
}

fn check_version(v: &str) -> Result<(), IoError> {
    let major = v.split('.').next().and_then(|m| m.parse::<u32>().ok());
    match major {
        Some(SCHEMA_MAJOR) => Ok(()),
        _ => Err(IoError::Schema(v.to_string())),
    }
}

pub fn to_json<T: Serialize>(body: &T) -> Result<String, IoError> {
    let mut s = serde_json::to_string_pretty(&Versioned::new(body))?;
    s.push('\n');
    Ok(s)
}

/// Parse a versioned document, checking the version before the body so an
/// unknown major is reported as such rather than as a field mismatch.
pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T, IoError> {
    let value: serde_json::Value = serde_json::from_str(text)?;
    let version = value
        .get("schema_version")
        .and_then(|v| v.as_str())
        .ok_or_else(|| IoError::Schema("<missing>".into()))?;
    check_version(version)?;
    Ok(serde_json::from_value::<Versioned<T>>(value)?.body)
}

pub fn write_json_file<T: Serialize>(path: &Path, body: &T) -> Result<(), IoError> {
    let mut f = create(path)?;
    f.write_all(to_json(body)?.as_bytes())?;
    f.flush()?;
    Ok(())
}

pub fn read_json_file<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let mut text = String::new();
    open(path)?.read_to_string(&mut text)?;
    from_json(&text)
}

/// Number squeezing panel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig3aRow {
    pub n_mean: f64,
    pub var_jz_plus_raw: f64,
    pub var_jz_plus_corrected: f64,
    pub shot_noise: f64,
    pub detection_noise: f64,
    pub squeeze_db: Option<f64>,
    pub squeeze_db_std: Option<f64>,
}

/// Transverse spin noise panel.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig3bRow {
    pub n_mean: f64,
    pub perp_sq_mean: f64,
    pub perp_sq_mean_corrected: f64,
    pub perp_sq_mean_std: Option<f64>,
    pub baseline_perp_sq_mean: f64,
    pub perp_std_ratio: f64,
    pub perp_std_ratio_std: Option<f64>,
}

/// Transverse spin length panel; `j_norm_ideal` is the noiseless split
/// twin-Fock value at the bin's atom number.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig3cRow {
    pub n_mean: f64,
    pub j_norm_a: f64,
    pub j_norm_a_std: Option<f64>,
    pub j_norm_b: f64,
    pub j_norm_b_std: Option<f64>,
    pub j_norm_a_corrected: f64,
    pub j_norm_b_corrected: f64,
    pub j_norm_ideal: f64,
}

/// Criterion panel. `lhs_perp_corrected` uses the noise-corrected transverse
/// term, for comparison with a prediction from the corrected budget.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Fig4Row {
    pub n_mean: f64,
    pub lhs: f64,
    pub lhs_std: Option<f64>,
    pub rhs: f64,
    pub rhs_std: Option<f64>,
    pub margin_std: Option<f64>,
    pub significance: Option<f64>,
    pub violation_fraction: f64,
    pub violated: bool,
    pub in_proof_domain: bool,
    pub lhs_perp_corrected: f64,
}

pub struct FigureTables {
    pub fig3a: Vec<Fig3aRow>,
    pub fig3b: Vec<Fig3bRow>,
    pub fig3c: Vec<Fig3cRow>,
    pub fig4: Vec<Fig4Row>,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

pub fn figure_tables(report: &AnalysisReport) -> FigureTables {
    let fit: &DetectionNoiseFit = &report.noise_fit;
    let row3a = |b: &BinResult| {
        let e = &b.estimates;
        Fig3aRow {
            n_mean: e.n_mean,
            var_jz_plus_raw: e.var_jz_plus_raw,
            var_jz_plus_corrected: e.var_jz_plus_corrected,
            shot_noise: e.shot_noise,
            detection_noise: fit.jz_plus_variance(e.n_mean),
            squeeze_db: finite(e.squeeze_db),
            squeeze_db_std: b.bootstrap.std.squeeze_db,
        }
    };
    let row3b = |b: &BinResult| {
        let e = &b.estimates;
        Fig3bRow {
            n_mean: e.n_mean,
            perp_sq_mean: e.perp_sq_mean,
            perp_sq_mean_corrected: e.perp_sq_mean_corrected,
            perp_sq_mean_std: b.bootstrap.std.perp_sq_mean,
            baseline_perp_sq_mean: e.baseline_perp_sq_mean,
            perp_std_ratio: e.perp_std_ratio,
            perp_std_ratio_std: b.bootstrap.std.perp_std_ratio,
        }
    };
    let row3c = |b: &BinResult| {
        let e = &b.estimates;
        let n_pairs = (e.n_mean / 2.0).round().max(1.0) as u32;
        Fig3cRow {
            n_mean: e.n_mean,
            j_norm_a: e.j_norm_a,
            j_norm_a_std: b.bootstrap.std.j_norm_a,
            j_norm_b: e.j_norm_b,
            j_norm_b_std: b.bootstrap.std.j_norm_b,
            j_norm_a_corrected: e.j_norm_a_corrected,
            j_norm_b_corrected: e.j_norm_b_corrected,
            j_norm_ideal: split_twin_fock_moments(n_pairs).map_or(f64::NAN, |m| m.j_norm_a),
        }
    };
    let row4 = |b: &BinResult| {
        let e = &b.estimates;
        Fig4Row {
            n_mean: e.n_mean,
            lhs: e.lhs,
            lhs_std: b.bootstrap.std.lhs,
            rhs: e.rhs,
            rhs_std: b.bootstrap.std.rhs,
            margin_std: b.bootstrap.std.margin,
            significance: b.bootstrap.significance,
            violation_fraction: b.bootstrap.violation_fraction,
            violated: e.violated,
            in_proof_domain: e.in_proof_domain,
            lhs_perp_corrected: (e.var_jz_plus_corrected + 0.5) * e.perp_sq_mean_corrected,
        }
    };
    FigureTables {
        fig3a: report.bins.iter().map(row3a).collect(),
        fig3b: report.bins.iter().map(row3b).collect(),
        fig3c: report.bins.iter().map(row3c).collect(),
        fig4: report.bins.iter().map(row4).collect(),
    }
}

fn write_table<T: Serialize>(path: &Path, rows: &[T], header: &[&str]) -> Result<(), IoError> {
    let mut f = create(path)?;
    write_rows(&mut f, header, rows)?;
    f.flush()?;
    Ok(())
}

pub const FIG3A_HEADER: [&str; 7] = [
    "n_mean",
    "var_jz_plus_raw",
    "var_jz_plus_corrected",
    "shot_noise",
    "detection_noise",
    "squeeze_db",
    "squeeze_db_std",
];
pub const FIG3B_HEADER: [&str; 7] = [
    "n_mean",
    "perp_sq_mean",
    "perp_sq_mean_corrected",
    "perp_sq_mean_std",
    "baseline_perp_sq_mean",
    "perp_std_ratio",
    "perp_std_ratio_std",
];
pub const FIG3C_HEADER: [&str; 8] = [
    "n_mean",
    "j_norm_a",
    "j_norm_a_std",
    "j_norm_b",
    "j_norm_b_std",
    "j_norm_a_corrected",
    "j_norm_b_corrected",
    "j_norm_ideal",
];
pub const FIG4_HEADER: [&str; 11] = [
    "n_mean",
    "lhs",
    "lhs_std",
    "rhs",
    "rhs_std",
    "margin_std",
    "significance",
    "violation_fraction",
    "violated",
    "in_proof_domain",
    "lhs_perp_corrected",
];

/// Write `fig3a.csv`, `fig3b.csv`, `fig3c.csv` and `fig4.csv` into `dir`.
pub fn write_figure_tables(dir: &Path, report: &AnalysisReport) -> Result<(), IoError> {
    let t = figure_tables(report);
    write_table(&dir.join("fig3a.csv"), &t.fig3a, &FIG3A_HEADER)?;
    write_table(&dir.join("fig3b.csv"), &t.fig3b, &FIG3B_HEADER)?;
    write_table(&dir.join("fig3c.csv"), &t.fig3c, &FIG3C_HEADER)?;
    write_table(&dir.join("fig4.csv"), &t.fig4, &FIG4_HEADER)?;
    Ok(())
}
