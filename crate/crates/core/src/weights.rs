//! Weight functions for the frequency-domain least-squares fits.
//!
//! A base weight `w` lives on `[eps, 1]` and is stretched to `[eps U, U]` as
//! `w^U(u) = w(u / U) / U`. Fitting `Re log phi(u) ~ -sigma2 u^2 / 2 - lambda`
//! and `Im log phi(u) ~ gamma u` under that weight reduces to small normal
//! equations whose solutions are linear functionals of the data. The kernels
//! of those functionals are the derived weights.
//!
//! Every integral here is the trapezoid rule over the grid nodes that fall in
//! the band, so the fits are exact for data lying in the regression span.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::charfn::LogCfSeries;
use crate::error::{QidError, Result};
use crate::grid::{trapezoid_weights, UniformGrid};

pub const DEFAULT_EPSILON: f64 = 0.5;

/// Nodes on `[0, U]` used when a weight is materialized without data.
pub const DEFAULT_WEIGHT_NODES: usize = 4097;

/// Relative determinant below which the 2x2 system counts as singular.
const SINGULAR_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum WeightKind {
    #[default]
    Indicator,
    /// `exp(-1 / ((u - eps)(1 - u)))`, smooth with all derivatives vanishing
    /// at both ends of the support.
    SmoothBump,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaseWeight {
    epsilon: f64,
    kind: WeightKind,
}

pub fn build_base_weight(epsilon: f64, kind: WeightKind) -> Result<BaseWeight> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(QidError::BadEpsilon(epsilon));
    }
    Ok(BaseWeight { epsilon, kind })
}

impl Default for BaseWeight {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            kind: WeightKind::Indicator,
        }
    }
}

impl BaseWeight {
    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    /// `w(v)` for `v` on the unit scale.
    pub fn eval(&self, v: f64) -> f64 {
        let eps = self.epsilon;
        match self.kind {
            WeightKind::Indicator => {
                if v >= eps * (1.0 - 1e-12) && v <= 1.0 + 1e-12 {
                    1.0
                } else {
                    0.0
                }
            }
            WeightKind::SmoothBump => {
                if v <= eps || v >= 1.0 {
                    0.0
                } else {
                    // peak value 1 at the midpoint
                    let peak = 4.0 / ((1.0 - eps) * (1.0 - eps));
                    (peak - 1.0 / ((v - eps) * (1.0 - v))).exp()
                }
            }
        }
    }

    /// `w^U(u) = w(u / U) / U`.
    pub fn eval_scaled(&self, u: f64, scale: f64) -> f64 {
        self.eval(u / scale) / scale
    }

    /// Moments of the unscaled weight by trapezoid on `count` nodes over `[eps, 1]`.
    pub fn moments(&self, count: usize) -> Result<WeightMoments> {
        let g = UniformGrid::new(self.epsilon, 1.0, count)?;
        let q = g.trapezoid_weights();
        let mut m = WeightMoments::default();
        for (k, v) in g.nodes().enumerate() {
            m.accumulate(q[k] * self.eval(v), v);
        }
        Ok(m)
    }
}

/// `m0 = int w`, `m2 = int w u^2/2`, `m4 = int w u^4/4`, `mg = int w u^2`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WeightMoments {
    pub m0: f64,
    pub m2: f64,
    pub m4: f64,
    pub mg: f64,
}

impl WeightMoments {
    fn accumulate(&mut self, c: f64, u: f64) {
        let u2 = u * u;
        self.m0 += c;
        self.m2 += c * 0.5 * u2;
        self.m4 += c * 0.25 * u2 * u2;
        self.mg += c * u2;
    }

    pub fn determinant(&self) -> f64 {
        self.m0 * self.m4 - self.m2 * self.m2
    }

    fn checked_determinant(&self) -> Result<f64> {
        let d = self.determinant();
        if !(d > SINGULAR_RTOL * self.m0 * self.m4) {
            return Err(QidError::SingularSystem(d));
        }
        Ok(d)
    }
}

/// Quadrature for `int w^U(u) f(u) du` over the band nodes of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedBand {
    pub range: Range<usize>,
    pub u: Vec<f64>,
    /// Trapezoid weights of the band sub-grid.
    pub quadrature: Vec<f64>,
    /// `w^U(u_k)`.
    pub weight: Vec<f64>,
}

impl WeightedBand {
    pub fn new(grid: &UniformGrid, w: &BaseWeight, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(QidError::InvalidConfig(format!(
                "band scale must be positive, got {scale}"
            )));
        }
        let lo = w.epsilon * scale;
        let range = grid.index_band(lo, scale);
        let top = grid.stop() + 1e-9 * grid.spacing();
        if range.len() < 3 || scale > top || lo < grid.start() {
            return Err(QidError::GridTooCoarse {
                lo,
                hi: scale,
                nodes: range.len(),
            });
        }
        let u: Vec<f64> = range.clone().map(|k| grid.node(k)).collect();
        let quadrature = trapezoid_weights(u.len(), grid.spacing());
        let weight = match w.kind {
            // nodes were selected by the band itself
            WeightKind::Indicator => vec![1.0 / scale; u.len()],
            WeightKind::SmoothBump => u.iter().map(|x| w.eval_scaled(*x, scale)).collect(),
        };
        Ok(Self {
            range,
            u,
            quadrature,
            weight,
        })
    }

    pub fn moments(&self) -> WeightMoments {
        let mut m = WeightMoments::default();
        for k in 0..self.u.len() {
            m.accumulate(self.quadrature[k] * self.weight[k], self.u[k]);
        }
        m
    }

    /// `int w^U(u) g(u) f(u) du` for band-aligned `f`.
    fn integrate(&self, f: &[f64], g: impl Fn(f64) -> f64) -> f64 {
        (0..self.u.len())
            .map(|k| self.quadrature[k] * self.weight[k] * g(self.u[k]) * f[k])
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaLambda {
    pub sigma2: f64,
    pub lambda_star: f64,
}

/// Weighted least squares of `Re log phi(u) + sigma2 u^2/2 + lambda` over
/// `[eps U, U]`, solved through its 2x2 normal equations.
pub fn sigma_lambda_normal_equations(
    logcf: &LogCfSeries,
    w: &BaseWeight,
    scale: f64,
) -> Result<SigmaLambda> {
    let band = WeightedBand::new(&logcf.grid, w, scale)?;
    let m = band.moments();
    let d = m.checked_determinant()?;
    let y = &logcf.real_part[band.range.clone()];
    let y0 = band.integrate(y, |_| 1.0);
    let y2 = band.integrate(y, |u| 0.5 * u * u);
    // [m4 m2; m2 m0] [sigma2; lambda] = -[y2; y0]
    Ok(SigmaLambda {
        sigma2: -(m.m0 * y2 - m.m2 * y0) / d,
        lambda_star: -(m.m4 * y0 - m.m2 * y2) / d,
    })
}

/// Weighted least squares of `Im log phi(u) - gamma u` over `[eps V, V]`.
pub fn gamma_normal_equation(logcf: &LogCfSeries, w: &BaseWeight, scale: f64) -> Result<f64> {
    let band = WeightedBand::new(&logcf.grid, w, scale)?;
    let m = band.moments();
    if !(m.mg > 0.0) {
        return Err(QidError::SingularSystem(m.mg));
    }
    let y = &logcf.imag_part[band.range.clone()];
    Ok(band.integrate(y, |u| u) / m.mg)
}

/// The derived weight families on a band, as node values paired with the
/// band quadrature: `sigma2_hat = sum_k quadrature[k] sigma2[k] y_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedWeights {
    pub band: WeightedBand,
    pub sigma2: Vec<f64>,
    pub lambda: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl DerivedWeights {
    pub fn on_grid(grid: &UniformGrid, w: &BaseWeight, scale: f64) -> Result<Self> {
        let band = WeightedBand::new(grid, w, scale)?;
        let m = band.moments();
        let d = m.checked_determinant()?;
        let sigma2 = band
            .u
            .iter()
            .zip(&band.weight)
            .map(|(u, wu)| -wu * (m.m0 * 0.5 * u * u - m.m2) / d)
            .collect();
        let lambda = band
            .u
            .iter()
            .zip(&band.weight)
            .map(|(u, wu)| -wu * (m.m4 - m.m2 * 0.5 * u * u) / d)
            .collect();
        let gamma = band
            .u
            .iter()
            .zip(&band.weight)
            .map(|(u, wu)| wu * u / m.mg)
            .collect();
        Ok(Self {
            band,
            sigma2,
            lambda,
            gamma,
        })
    }

    /// Default grid `[0, U]` with [`DEFAULT_WEIGHT_NODES`] nodes.
    pub fn materialize(w: &BaseWeight, scale: f64) -> Result<Self> {
        let grid = UniformGrid::new(0.0, scale, DEFAULT_WEIGHT_NODES)?;
        Self::on_grid(&grid, w, scale)
    }

    /// `int kernel(u) f(u) du` by the band quadrature.
    pub fn apply(&self, kernel: &[f64], f: impl Fn(f64) -> f64) -> f64 {
        (0..kernel.len())
            .map(|k| self.band.quadrature[k] * kernel[k] * f(self.band.u[k]))
            .sum()
    }

    /// The sigma-squared kernel written with raw power moments
    /// `int w s^j ds`, as an independent route to the same values.
    pub fn sigma2_kernel_power_form(&self) -> Vec<f64> {
        let b = &self.band;
        let (mut s0, mut s2, mut s4) = (0.0, 0.0, 0.0);
        for k in 0..b.u.len() {
            let c = b.quadrature[k] * b.weight[k];
            let u2 = b.u[k] * b.u[k];
            s0 += c;
            s2 += c * u2;
            s4 += c * u2 * u2;
        }
        let denom = s2 * s2 - s4 * s0;
        b.u.iter()
            .zip(&b.weight)
            .map(|(u, wu)| 2.0 * wu * (u * u * s0 - s2) / denom)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightIdentities {
    /// `(int w_sigma2, int -u^2/2 w_sigma2)`, ideally `(0, 1)`.
    pub check_sigma: (f64, f64),
    /// `(int -w_lambda, int u^2/2 w_lambda)`, ideally `(1, 0)`.
    pub check_lambda: (f64, f64),
    /// `int u w_gamma`, ideally 1.
    pub check_gamma: f64,
}

impl WeightIdentities {
    pub fn max_error(&self) -> f64 {
        [
            self.check_sigma.0.abs(),
            (self.check_sigma.1 - 1.0).abs(),
            (self.check_lambda.0 - 1.0).abs(),
            self.check_lambda.1.abs(),
            (self.check_gamma - 1.0).abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

/// Moment identities of the derived families materialized at scale `U`.
pub fn derived_weight_identities(w: &BaseWeight, scale: f64) -> Result<WeightIdentities> {
    let d = DerivedWeights::materialize(w, scale)?;
    Ok(identities_of(&d))
}

pub fn identities_of(d: &DerivedWeights) -> WeightIdentities {
    WeightIdentities {
        check_sigma: (
            d.apply(&d.sigma2, |_| 1.0),
            d.apply(&d.sigma2, |u| -0.5 * u * u),
        ),
        check_lambda: (
            -d.apply(&d.lambda, |_| 1.0),
            d.apply(&d.lambda, |u| 0.5 * u * u),
        ),
        check_gamma: d.apply(&d.gamma, |u| u),
    }
}
