//! WebAssembly entry points for `www/index.html`. Results cross the boundary
//! as JSON strings; errors become JS exceptions.

use serde_json::json;
use twinsplit::analysis::{analyze, AnalysisConfig};
use twinsplit::observables::{evaluate_criterion, f_bound, split_twin_fock_moments};
use twinsplit::sampler::sample_campaign;
use twinsplit::{DetectionNoiseFit, NoiseModel, SamplerConfig, Source};
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsValue {
    JsValue::from_str(&e.to_string())
}

/// Exact moments and criterion of the noiseless split twin-Fock state with
/// `n_pairs` atoms in each spin level.
#[wasm_bindgen]
pub fn exact_criterion(n_pairs: u32) -> Result<String, JsValue> {
    let m = split_twin_fock_moments(n_pairs).map_err(js_err)?;
    let c = evaluate_criterion(&m).map_err(js_err)?;
    Ok(json!({ "moments": m, "criterion": c }).to_string())
}

/// Right-hand side of the criterion for given normalized spin lengths.
#[wasm_bindgen]
pub fn separable_bound(j_norm_a: f64, j_norm_b: f64) -> Result<f64, JsValue> {
    f_bound(j_norm_a, j_norm_b).map_err(js_err)
}

/// Sample a fixed-N campaign with the given noise and analyze it.
#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn simulate_campaign(
    n_pairs: u32,
    shots: usize,
    seed: u64,
    det_var_const: f64,
    flip_prob: f64,
    perp_dephase: f64,
    split_sigma: f64,
    resamples: usize,
) -> Result<String, JsValue> {
    let noise = NoiseModel {
        det_var_const,
        flip_prob,
        perp_dephase,
        split_sigma,
        ..NoiseModel::none()
    };
    let cfg = SamplerConfig {
        source: Source::Fixed { n_pairs },
        shots_z: shots,
        shots_perp: shots,
        seed,
        exact_statevector_below: 0,
    };
    let data = sample_campaign(&cfg, &noise).map_err(js_err)?;
    let analysis = AnalysisConfig {
        bin_width: (4 * n_pairs + 2) as f64,
        resamples: resamples.max(2),
        seed,
        correct_perp: false,
    };
    let report = analyze(&data, &DetectionNoiseFit::known(det_var_const, 0.0), &analysis).map_err(js_err)?;
    let bins: Vec<_> = report.bins.iter().map(|b| json!({ "estimates": b.estimates, "bootstrap": b.bootstrap })).collect();
    Ok(json!({ "bins": bins, "skipped": report.skipped }).to_string())
}
