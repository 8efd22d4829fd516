//! WebAssembly bindings behind `www/index.html`.
//!
//! Each exported function takes plain numbers and a model preset name and
//! returns a JSON document the page draws on a canvas. The `*_view`
//! functions hold the logic and are usable natively.

use qid_core::charfn::{distinguished_log, ecf_on_grid, exact_cf, DEFAULT_MODULUS_FLOOR};
use qid_core::mixture::{estimate_mixture, l2_distance, MixtureConfig};
use qid_core::models::{
    exact_g_circ, exact_triplet, nu_tilde_density, sample_model, ExactTriplet, NuTildeSeriesConfig,
};
use qid_core::spectral::{full_pipeline, pipeline_on_cf, PipelineConfig, TripletEstimate};
use qid_core::study::default_density_grid;
use qid_core::{ModelSpec, QidError, UniformGrid};
use serde::Serialize;
use wasm_bindgen::prelude::*;

/// Points per drawn curve.
const PLOT_POINTS: usize = 401;

#[derive(Debug, thiserror::Error)]
pub enum DemoError {
    #[error(transparent)]
    Core(#[from] QidError),
    #[error("unknown model preset {0:?}")]
    UnknownPreset(String),
}

pub type DemoResult<T> = std::result::Result<T, DemoError>;

/// `two-normal`, `bart-simpson` or `student`.
pub fn preset(name: &str) -> DemoResult<ModelSpec> {
    match name {
        "two-normal" => Ok(ModelSpec::two_normal_benchmark()),
        "bart-simpson" => Ok(ModelSpec::bart_simpson_benchmark()),
        "student" => Ok(ModelSpec::student_benchmark()),
        _ => Err(DemoError::UnknownPreset(name.to_string())),
    }
}

/// Band edge `U = V` that works for the preset at moderate `n`.
pub fn default_band(name: &str) -> DemoResult<f64> {
    preset(name).map(|m| match m {
        ModelSpec::BartSimpsonModified { .. } => 52.0,
        ModelSpec::StudentPlusNormalMixture { .. } => 5.0,
        _ => 8.0,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct TripletView {
    pub u: Vec<f64>,
    /// `log |phi_n(u)|` of the sample.
    pub log_modulus: Vec<f64>,
    pub log_modulus_exact: Vec<f64>,
    pub estimate: TripletEstimate,
    pub truth: ExactTriplet,
}

/// Empirical against exact log-modulus on `[0, band]`, with the triplet
/// estimated on that band.
pub fn triplet_view(name: &str, n: usize, seed: u64, band: f64) -> DemoResult<TripletView> {
    let model = preset(name)?;
    let sample = sample_model(&model, n, seed)?;
    let cfg = PipelineConfig {
        u: band,
        v: band,
        ..PipelineConfig::default()
    };
    let x_grid = default_density_grid(&model)?;
    let estimate = full_pipeline(&sample, &cfg, x_grid)?.triplet;

    let grid = UniformGrid::new(0.0, band, PLOT_POINTS)?;
    let log = distinguished_log(&ecf_on_grid(&sample, grid)?, DEFAULT_MODULUS_FLOOR)?;
    let exact = exact_cf(&model, grid)?;
    Ok(TripletView {
        u: grid.to_vec(),
        log_modulus: log.real_part,
        log_modulus_exact: exact.values.iter().map(|z| z.norm().ln()).collect(),
        estimate,
        truth: exact_triplet(&model)?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MixtureView {
    pub x: Vec<f64>,
    pub g_hat: Vec<f64>,
    pub g_circ_plus: Vec<f64>,
    pub g_circ_exact: Vec<f64>,
    pub p_hat: f64,
    pub sigma2_hat: f64,
    pub h: f64,
    pub l2: f64,
}

/// Kernel estimate of the sample density and the contaminant left after
/// removing the estimated normal part.
pub fn mixture_view(name: &str, n: usize, seed: u64, band: f64) -> DemoResult<MixtureView> {
    let model = preset(name)?;
    let sample = sample_model(&model, n, seed)?;
    let cfg = PipelineConfig {
        u: band,
        v: band,
        ..PipelineConfig::default()
    };
    let full = default_density_grid(&model)?;
    let x_grid = UniformGrid::new(full.start(), full.stop(), PLOT_POINTS)?;
    let t = full_pipeline(&sample, &cfg, x_grid)?.triplet;
    let m = estimate_mixture(
        &sample,
        t.p_hat,
        t.sigma2,
        &MixtureConfig::default(),
        x_grid,
    )?;
    let truth = exact_g_circ(&model, x_grid)?;
    Ok(MixtureView {
        x: x_grid.to_vec(),
        l2: l2_distance(&m.g_circ_plus, &truth)?,
        g_hat: m.g_hat.values,
        g_circ_plus: m.g_circ_plus.values,
        g_circ_exact: truth.values,
        p_hat: m.p_hat,
        sigma2_hat: m.sigma2_hat,
        h: m.h,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct JumpView {
    pub x: Vec<f64>,
    pub estimate: Vec<f64>,
    pub series: Vec<f64>,
    pub l2: f64,
}

/// Jump density of the two-normal preset recovered with cutoff `t`. With
/// `n == 0` the exact characteristic function stands in for the sample.
pub fn jump_view(n: usize, seed: u64, t: f64) -> DemoResult<JumpView> {
    let model = ModelSpec::two_normal_benchmark();
    let cfg = PipelineConfig {
        u: 8.0,
        v: 8.0,
        t: Some(t),
        ..PipelineConfig::default()
    };
    let x_grid = UniformGrid::new(-6.0, 6.0, PLOT_POINTS)?;
    let out = if n == 0 {
        let cf = exact_cf(&model, cfg.frequency_grid()?)?;
        pipeline_on_cf(&cf, &cfg, x_grid)?
    } else {
        full_pipeline(&sample_model(&model, n, seed)?, &cfg, x_grid)?
    };
    let series = nu_tilde_density(&model, x_grid, NuTildeSeriesConfig::default())?;
    Ok(JumpView {
        x: x_grid.to_vec(),
        l2: l2_distance(&out.s, &series)?,
        estimate: out.s.values,
        series: series.values,
    })
}

#[wasm_bindgen(js_name = defaultBand)]
pub fn default_band_js(name: &str) -> Result<f64, String> {
    default_band(name).map_err(|e| e.to_string())
}

fn to_json<T: Serialize>(r: DemoResult<T>) -> Result<String, String> {
    r.map(|v| serde_json::to_string(&v).expect("view serializes"))
        .map_err(|e| e.to_string())
}

#[wasm_bindgen(js_name = exploreTriplet)]
pub fn explore_triplet(name: &str, n: u32, seed: u32, band: f64) -> Result<String, String> {
    to_json(triplet_view(name, n as usize, seed.into(), band))
}

#[wasm_bindgen(js_name = decontaminate)]
pub fn decontaminate(name: &str, n: u32, seed: u32, band: f64) -> Result<String, String> {
    to_json(mixture_view(name, n as usize, seed.into(), band))
}

#[wasm_bindgen(js_name = jumpDensity)]
pub fn jump_density(n: u32, seed: u32, cutoff: f64) -> Result<String, String> {
    to_json(jump_view(n as usize, seed.into(), cutoff))
}
