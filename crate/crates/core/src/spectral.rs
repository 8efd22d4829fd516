//! The four-step estimator: ECF, continuous log, weighted fits for
//! `(gamma*, sigma2, lambda*)`, and a tapered Fourier inversion for the
//! jump density `s`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::charfn::{
    distinguished_log, ecf_on_grid, event_diagnostics, ComplexSeries, LogCfSeries,
    DEFAULT_MODULUS_FLOOR,
};
use crate::curve::DensityCurve;
use crate::error::{QidError, Result};
use crate::grid::{trapezoid_weights, UniformGrid};
use crate::sample::Sample;
use crate::weights::{
    build_base_weight, gamma_normal_equation, sigma_lambda_normal_equations, BaseWeight,
    WeightKind, DEFAULT_EPSILON,
};

/// Frequency nodes on `[0, max(U, V, T)]`.
pub const DEFAULT_GRID_COUNT: usize = 4097;
pub const DEFAULT_TAPER_FLAT: f64 = 0.8;

/// Nodes per block between exact phase evaluations in the inversion.
const X_ANCHOR_STRIDE: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripletEstimate {
    pub gamma_star: f64,
    /// Clamped at zero.
    pub sigma2: f64,
    /// Clamped at zero.
    pub lambda_star: f64,
    pub p_hat: f64,
    pub sigma2_raw: f64,
    pub lambda_star_raw: f64,
    pub min_modulus: f64,
    #[serde(rename = "U")]
    pub u: f64,
    #[serde(rename = "V")]
    pub v: f64,
    pub epsilon: f64,
    pub weight_kind: WeightKind,
    #[serde(rename = "T")]
    pub t: f64,
    pub grid_count: usize,
    pub n: usize,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Taper {
    /// 1 on `|v| <= a`, cosine roll-off to 0 at `|v| = 1`.
    FlatTopCosine { a: f64 },
}

impl Default for Taper {
    fn default() -> Self {
        Taper::FlatTopCosine {
            a: DEFAULT_TAPER_FLAT,
        }
    }
}

impl Taper {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Taper::FlatTopCosine { a } if a > 0.0 && a < 1.0 => Ok(()),
            Taper::FlatTopCosine { a } => Err(QidError::InvalidConfig(format!(
                "taper flat part must lie in (0, 1), got {a}"
            ))),
        }
    }

    pub fn eval(&self, v: f64) -> f64 {
        match *self {
            Taper::FlatTopCosine { a } => {
                let v = v.abs();
                if v <= a {
                    1.0
                } else if v >= 1.0 {
                    0.0
                } else {
                    0.5 * (1.0 + (PI * (v - a) / (1.0 - a)).cos())
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InversionConfig {
    #[serde(rename = "T")]
    pub t: f64,
    pub taper: Taper,
    pub x_grid: UniformGrid,
}

/// Estimator knobs shared by every entry point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    #[serde(rename = "U")]
    pub u: f64,
    #[serde(rename = "V")]
    pub v: f64,
    /// Inversion cutoff; `U` when absent.
    #[serde(rename = "T")]
    pub t: Option<f64>,
    pub epsilon: f64,
    pub weight_kind: WeightKind,
    pub grid_count: usize,
    pub modulus_floor: f64,
    pub taper: Taper,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            u: 8.0,
            v: 8.0,
            t: None,
            epsilon: DEFAULT_EPSILON,
            weight_kind: WeightKind::Indicator,
            grid_count: DEFAULT_GRID_COUNT,
            modulus_floor: DEFAULT_MODULUS_FLOOR,
            taper: Taper::default(),
        }
    }
}

impl PipelineConfig {
    pub fn cutoff(&self) -> f64 {
        self.t.unwrap_or(self.u)
    }

    pub fn weight(&self) -> Result<BaseWeight> {
        build_base_weight(self.epsilon, self.weight_kind)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, x) in [("U", self.u), ("V", self.v), ("T", self.cutoff())] {
            if !(x > 0.0) || !x.is_finite() {
                return Err(QidError::InvalidConfig(format!(
                    "{name} must be positive, got {x}"
                )));
            }
        }
        if !(self.modulus_floor > 0.0) {
            return Err(QidError::InvalidConfig(format!(
                "modulus floor must be positive, got {}",
                self.modulus_floor
            )));
        }
        self.taper.validate()?;
        self.weight()?;
        Ok(())
    }

    /// `[0, max(U, V, T)]` with `grid_count` nodes.
    pub fn frequency_grid(&self) -> Result<UniformGrid> {
        UniformGrid::new(0.0, self.u.max(self.v).max(self.cutoff()), self.grid_count)
    }
}

/// Steps 1 to 3 on an already computed log characteristic function.
pub fn triplet_from_log(
    log_cf: &LogCfSeries,
    w: &BaseWeight,
    u: f64,
    v: f64,
    min_modulus: f64,
) -> Result<TripletEstimate> {
    let sl = sigma_lambda_normal_equations(log_cf, w, u)?;
    let gamma_star = gamma_normal_equation(log_cf, w, v)?;
    let lambda_star = sl.lambda_star.max(0.0);
    let p_hat = (-lambda_star).exp().clamp(f64::MIN_POSITIVE, 1.0);
    Ok(TripletEstimate {
        gamma_star,
        sigma2: sl.sigma2.max(0.0),
        lambda_star,
        p_hat,
        sigma2_raw: sl.sigma2,
        lambda_star_raw: sl.lambda_star,
        min_modulus,
        u,
        v,
        epsilon: w.epsilon(),
        weight_kind: w.kind(),
        t: u,
        grid_count: log_cf.grid.count(),
        n: 0,
        seed: None,
    })
}

/// Steps 1 to 3: `(gamma*, sigma2, lambda*)` and `p_hat = exp(-lambda*)`.
pub fn estimate_triplet(
    sample: &Sample,
    w: &BaseWeight,
    u: f64,
    v: f64,
    grid_count: usize,
) -> Result<TripletEstimate> {
    sample.require_non_empty()?;
    let grid = UniformGrid::new(0.0, u.max(v), grid_count)?;
    let ecf = ecf_on_grid(sample, grid)?;
    let log_cf = distinguished_log(&ecf, DEFAULT_MODULUS_FLOOR)?;
    let diag = event_diagnostics(&ecf, None)?;
    let mut est = triplet_from_log(&log_cf, w, u, v, diag.min_modulus)?;
    est.n = sample.len();
    est.seed = sample.seed;
    Ok(est)
}

/// Step 4 on an already computed log characteristic function:
/// `s(x) = (1/pi) int_0^T Re[e^{-iux} R(u) w_s(u/T)] du` with
/// `R(u) = log phi(u) - i gamma u + sigma2 u^2/2 + lambda`.
pub fn jump_density_from_log(
    log_cf: &LogCfSeries,
    triplet: &TripletEstimate,
    inv: &InversionConfig,
) -> Result<DensityCurve> {
    inv.taper.validate()?;
    let grid = log_cf.grid;
    if grid.zero_index() != Some(0) {
        return Err(QidError::MissingAnchor);
    }
    let top = grid.stop() + 1e-9 * grid.spacing();
    if !(inv.t > 0.0) || inv.t > top {
        return Err(QidError::BadCutoff {
            cutoff: inv.t,
            u_max: grid.stop(),
        });
    }
    let band = grid.index_band(0.0, inv.t);
    if band.len() < 2 {
        return Err(QidError::GridTooCoarse {
            lo: 0.0,
            hi: inv.t,
            nodes: band.len(),
        });
    }
    let q = trapezoid_weights(band.len(), grid.spacing());
    let (gamma, sigma2, lambda) = (triplet.gamma_star, triplet.sigma2, triplet.lambda_star);
    let mut coef = Vec::with_capacity(band.len());
    let mut freq = Vec::with_capacity(band.len());
    for k in band {
        let u = grid.node(k);
        let r = log_cf.value(k) + Complex64::new(0.5 * sigma2 * u * u + lambda, -gamma * u);
        let c = r * (q[k] * inv.taper.eval(u / inv.t) / PI);
        if c != Complex64::new(0.0, 0.0) {
            coef.push(c);
            freq.push(u);
        }
    }
    Ok(DensityCurve {
        x_grid: inv.x_grid,
        values: real_inverse_transform(&coef, &freq, inv.x_grid),
    })
}

/// `out_j = sum_k Re[coef_k exp(-i freq_k x_j)]`, advancing the phase along
/// `x` by rotation within blocks.
fn real_inverse_transform(coef: &[Complex64], freq: &[f64], x_grid: UniformGrid) -> Vec<f64> {
    let dx = x_grid.spacing();
    let steps: Vec<Complex64> = freq
        .iter()
        .map(|u| Complex64::from_polar(1.0, -u * dx))
        .collect();
    let mut out = vec![0.0; x_grid.count()];
    let mut j0 = 0;
    while j0 < out.len() {
        let j1 = (j0 + X_ANCHOR_STRIDE).min(out.len());
        let x0 = x_grid.node(j0);
        let block = &mut out[j0..j1];
        for ((c, u), step) in coef.iter().zip(freq).zip(&steps) {
            let mut z = c * Complex64::from_polar(1.0, -u * x0);
            for acc in block.iter_mut() {
                *acc += z.re;
                z *= step;
            }
        }
        j0 = j1;
    }
    out
}

/// Step 4 from the sample, recomputing the ECF on a grid of `grid_count`
/// nodes over `[0, max(U, V, T)]`.
pub fn estimate_jump_density(
    sample: &Sample,
    triplet: &TripletEstimate,
    inv: &InversionConfig,
    grid_count: usize,
) -> Result<DensityCurve> {
    let stop = triplet.u.max(triplet.v).max(inv.t);
    let grid = UniformGrid::new(0.0, stop, grid_count)?;
    let ecf = ecf_on_grid(sample, grid)?;
    let log_cf = distinguished_log(&ecf, DEFAULT_MODULUS_FLOOR)?;
    jump_density_from_log(&log_cf, triplet, inv)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutput {
    pub triplet: TripletEstimate,
    pub s: DensityCurve,
}

/// All four steps on a characteristic function already sampled on
/// `cfg.frequency_grid()`.
pub fn pipeline_on_cf(
    cf: &ComplexSeries,
    cfg: &PipelineConfig,
    x_grid: UniformGrid,
) -> Result<PipelineOutput> {
    cfg.validate()?;
    let log_cf = distinguished_log(cf, cfg.modulus_floor)?;
    let diag = event_diagnostics(cf, None)?;
    let mut triplet = triplet_from_log(&log_cf, &cfg.weight()?, cfg.u, cfg.v, diag.min_modulus)?;
    triplet.t = cfg.cutoff();
    let inv = InversionConfig {
        t: cfg.cutoff(),
        taper: cfg.taper,
        x_grid,
    };
    let s = jump_density_from_log(&log_cf, &triplet, &inv)?;
    Ok(PipelineOutput { triplet, s })
}

/// All four steps sharing one ECF evaluation.
pub fn full_pipeline(
    sample: &Sample,
    cfg: &PipelineConfig,
    x_grid: UniformGrid,
) -> Result<PipelineOutput> {
    sample.require_non_empty()?;
    cfg.validate()?;
    let ecf = ecf_on_grid(sample, cfg.frequency_grid()?)?;
    let mut out = pipeline_on_cf(&ecf, cfg, x_grid)?;
    out.triplet.n = sample.len();
    out.triplet.seed = sample.seed;
    Ok(out)
}
