//! Kernel density estimate of the mixture and removal of its normal part.
//!
//! With `g = p N(0, sigma2) + (1 - p) g_circ`, the contaminant density is
//! recovered as `(g_n - p_n phi_{sigma_n}) / (1 - p_n)` and then cut at zero.

use serde::{Deserialize, Serialize};

use crate::curve::DensityCurve;
use crate::error::{QidError, Result};
use crate::grid::{trapezoid_uniform, UniformGrid};
use crate::kernel::{bandwidth_rule, KernelSpec, DEFAULT_BANDWIDTH_C};
use crate::models::normal_pdf;
use crate::sample::Sample;

pub const DEFAULT_DELTA_FLOOR: f64 = 0.01;
pub const DEFAULT_X_COUNT: usize = 2001;

/// `g_n(x) = (1/(n h)) sum_i K((X_i - x)/h)` on `x_grid`.
pub fn kde(
    sample: &Sample,
    kernel: KernelSpec,
    h: f64,
    x_grid: UniformGrid,
) -> Result<DensityCurve> {
    sample.require_non_empty()?;
    if !(h > 0.0) || !h.is_finite() {
        return Err(QidError::NonPositiveBandwidth(h));
    }
    let mut xs = sample.values().to_vec();
    xs.sort_by(f64::total_cmp);
    let reach = kernel.support_radius * h;
    let scale = 1.0 / (xs.len() as f64 * h);
    let values = x_grid
        .nodes()
        .map(|x| {
            let lo = xs.partition_point(|v| *v < x - reach);
            let hi = xs.partition_point(|v| *v <= x + reach);
            xs[lo..hi]
                .iter()
                .map(|v| kernel.evaluate((v - x) / h))
                .sum::<f64>()
                * scale
        })
        .collect();
    Ok(DensityCurve { x_grid, values })
}

/// `(g_hat - p_hat N(0, sigma2_hat)) / (1 - p_hat)` node by node.
pub fn decontaminate(g_hat: &DensityCurve, p_hat: f64, sigma2_hat: f64) -> Result<DensityCurve> {
    decontaminate_with_floor(g_hat, p_hat, sigma2_hat, DEFAULT_DELTA_FLOOR)
}

pub fn decontaminate_with_floor(
    g_hat: &DensityCurve,
    p_hat: f64,
    sigma2_hat: f64,
    delta_floor: f64,
) -> Result<DensityCurve> {
    if !(p_hat < 1.0 - delta_floor) {
        return Err(QidError::PTooCloseToOne {
            p_hat,
            floor: 1.0 - delta_floor,
        });
    }
    if !(sigma2_hat > 0.0) {
        return Err(QidError::NonPositiveVariance(sigma2_hat));
    }
    let values = g_hat
        .x_grid
        .nodes()
        .zip(&g_hat.values)
        .map(|(x, g)| (g - p_hat * normal_pdf(x, 0.0, sigma2_hat)) / (1.0 - p_hat))
        .collect();
    Ok(DensityCurve {
        x_grid: g_hat.x_grid,
        values,
    })
}

pub fn positive_part(curve: &DensityCurve) -> DensityCurve {
    DensityCurve {
        x_grid: curve.x_grid,
        values: curve.values.iter().map(|v| v.max(0.0)).collect(),
    }
}

/// Trapezoid approximation of `(int (a - b)^2 dx)^{1/2}`.
pub fn l2_distance(a: &DensityCurve, b: &DensityCurve) -> Result<f64> {
    if a.x_grid != b.x_grid || a.values.len() != b.values.len() {
        return Err(QidError::GridMismatch);
    }
    let sq: Vec<f64> = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y) * (x - y))
        .collect();
    Ok(trapezoid_uniform(&sq, a.x_grid.spacing()).sqrt())
}

/// Sample range padded by `4 max(sd, h)` on both sides.
pub fn default_x_grid(sample: &Sample, h: f64) -> Result<UniformGrid> {
    sample.require_non_empty()?;
    let xs = sample.values();
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sd = if xs.len() > 1 {
        sample.variance().sqrt()
    } else {
        0.0
    };
    let pad = 4.0 * sd.max(h);
    UniformGrid::new(lo - pad, hi + pad, DEFAULT_X_COUNT)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixtureConfig {
    pub kernel: KernelSpec,
    pub bandwidth_c: f64,
    pub delta_floor: f64,
    /// Rescale `g_circ_plus` to unit mass. Off by default.
    pub renormalize: bool,
}

impl Default for MixtureConfig {
    fn default() -> Self {
        Self {
            kernel: KernelSpec::default(),
            bandwidth_c: DEFAULT_BANDWIDTH_C,
            delta_floor: DEFAULT_DELTA_FLOOR,
            renormalize: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureEstimate {
    pub p_hat: f64,
    pub sigma2_hat: f64,
    pub h: f64,
    pub g_hat: DensityCurve,
    /// Signed estimate before cutting at zero.
    pub g_circ: DensityCurve,
    pub g_circ_plus: DensityCurve,
}

pub fn estimate_mixture(
    sample: &Sample,
    p_hat: f64,
    sigma2_hat: f64,
    cfg: &MixtureConfig,
    x_grid: UniformGrid,
) -> Result<MixtureEstimate> {
    let h = bandwidth_rule(sample.len(), cfg.bandwidth_c)?;
    let g_hat = kde(sample, cfg.kernel, h, x_grid)?;
    let g_circ = decontaminate_with_floor(&g_hat, p_hat, sigma2_hat, cfg.delta_floor)?;
    let mut g_circ_plus = positive_part(&g_circ);
    if cfg.renormalize {
        let mass = g_circ_plus.integral();
        if mass > 0.0 {
            g_circ_plus.values.iter_mut().for_each(|v| *v /= mass);
        }
    }
    Ok(MixtureEstimate {
        p_hat,
        sigma2_hat,
        h,
        g_hat,
        g_circ,
        g_circ_plus,
    })
}
