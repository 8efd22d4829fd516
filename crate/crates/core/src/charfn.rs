//! Empirical and exact characteristic functions on frequency grids, the
//! continuous-branch logarithm, and modulus/deviation diagnostics.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QidError, Result};
use crate::grid::UniformGrid;
use crate::models::ModelSpec;
use crate::sample::Sample;

pub const DEFAULT_MODULUS_FLOOR: f64 = 1e-6;

/// Grid nodes per exactly-evaluated anchor in the ECF recurrence.
const ANCHOR_STRIDE: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexSeries {
    pub grid: UniformGrid,
    pub values: Vec<Complex64>,
}

impl ComplexSeries {
    pub fn new(grid: UniformGrid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.count() {
            return Err(QidError::LengthMismatch {
                expected: grid.count(),
                actual: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: UniformGrid, f: impl Fn(f64) -> Complex64) -> Self {
        Self {
            values: grid.nodes().map(f).collect(),
            grid,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("u,re,im\n");
        for (u, z) in self.grid.nodes().zip(&self.values) {
            out.push_str(&format!("{u:?},{:?},{:?}\n", z.re, z.im));
        }
        out
    }
}

/// `log phi` on a grid, with the imaginary part continued along the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogCfSeries {
    pub grid: UniformGrid,
    pub real_part: Vec<f64>,
    pub imag_part: Vec<f64>,
}

impl LogCfSeries {
    pub fn from_fn(grid: UniformGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let (real_part, imag_part) = grid
            .nodes()
            .map(|u| {
                let z = f(u);
                (z.re, z.im)
            })
            .unzip();
        Self {
            grid,
            real_part,
            imag_part,
        }
    }

    pub fn value(&self, k: usize) -> Complex64 {
        Complex64::new(self.real_part[k], self.imag_part[k])
    }

    pub fn exp(&self) -> ComplexSeries {
        ComplexSeries {
            grid: self.grid,
            values: (0..self.grid.count())
                .map(|k| self.value(k).exp())
                .collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("u,re,im\n");
        for (k, u) in self.grid.nodes().enumerate() {
            out.push_str(&format!(
                "{u:?},{:?},{:?}\n",
                self.real_part[k], self.imag_part[k]
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CfDiagnostics {
    pub min_modulus: f64,
    pub max_relative_deviation: Option<f64>,
    pub u_max: f64,
}

/// `phi_n(u_k) = (1/n) sum_j exp(i u_k X_j)`.
///
/// Blocks of [`ANCHOR_STRIDE`] nodes start from an exactly evaluated phase and
/// advance by complex rotation, which keeps the inner loop free of
/// transcendental calls.
pub fn ecf_on_grid(sample: &Sample, grid: UniformGrid) -> Result<ComplexSeries> {
    sample.require_non_empty()?;
    let xs = sample.values();
    let n = xs.len();
    let h = grid.spacing();
    let mut values = Vec::with_capacity(grid.count());

    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    let mut step_re = vec![0.0; n];
    let mut step_im = vec![0.0; n];
    for (j, x) in xs.iter().enumerate() {
        let (s, c) = (h * x).sin_cos();
        step_re[j] = c;
        step_im[j] = s;
    }

    let mut k0 = 0;
    while k0 < grid.count() {
        let k1 = (k0 + ANCHOR_STRIDE).min(grid.count());
        let anchor = grid.node(k0);
        for (j, x) in xs.iter().enumerate() {
            let (s, c) = (anchor * x).sin_cos();
            re[j] = c;
            im[j] = s;
        }
        for k in k0..k1 {
            let (sr, si) = lane_sums(&re, &im);
            values.push(Complex64::new(sr / n as f64, si / n as f64));
            if k + 1 < k1 {
                rotate(&mut re, &mut im, &step_re, &step_im);
            }
        }
        k0 = k1;
    }
    if let Some(z) = grid.zero_index() {
        values[z] = Complex64::new(1.0, 0.0);
    }
    Ok(ComplexSeries { grid, values })
}

#[inline]
fn lane_sums(re: &[f64], im: &[f64]) -> (f64, f64) {
    let mut a = [0.0f64; 4];
    let mut b = [0.0f64; 4];
    let chunks = re.len() / 4 * 4;
    for (cr, ci) in re[..chunks]
        .chunks_exact(4)
        .zip(im[..chunks].chunks_exact(4))
    {
        for l in 0..4 {
            a[l] += cr[l];
            b[l] += ci[l];
        }
    }
    let mut sr = (a[0] + a[1]) + (a[2] + a[3]);
    let mut si = (b[0] + b[1]) + (b[2] + b[3]);
    for j in chunks..re.len() {
        sr += re[j];
        si += im[j];
    }
    (sr, si)
}

#[inline]
fn rotate(re: &mut [f64], im: &mut [f64], step_re: &[f64], step_im: &[f64]) {
    for (((r, i), c), s) in re.iter_mut().zip(im.iter_mut()).zip(step_re).zip(step_im) {
        let nr = *r * c - *i * s;
        let ni = *r * s + *i * c;
        *r = nr;
        *i = ni;
    }
}

/// Continuous logarithm anchored at `u = 0`.
///
/// Each node takes the branch of the principal argument closest to its
/// neighbour towards the anchor, so adjacent increments lie in `(-pi, pi]`.
pub fn distinguished_log(cf: &ComplexSeries, modulus_floor: f64) -> Result<LogCfSeries> {
    let grid = cf.grid;
    for (k, z) in cf.values.iter().enumerate() {
        let m = z.norm();
        if !(m > modulus_floor) {
            return Err(QidError::NearZeroModulus {
                index: k,
                u: grid.node(k),
                modulus: m,
                floor: modulus_floor,
            });
        }
    }
    let anchor = grid.zero_index().ok_or(QidError::MissingAnchor)?;
    let real_part: Vec<f64> = cf.values.iter().map(|z| z.norm().ln()).collect();
    let mut imag_part = vec![0.0; grid.count()];
    imag_part[anchor] = cf.values[anchor].arg();
    for k in anchor + 1..grid.count() {
        imag_part[k] = nearest_branch(cf.values[k].arg(), imag_part[k - 1]);
    }
    for k in (0..anchor).rev() {
        imag_part[k] = nearest_branch(cf.values[k].arg(), imag_part[k + 1]);
    }
    Ok(LogCfSeries {
        grid,
        real_part,
        imag_part,
    })
}

#[inline]
fn nearest_branch(principal: f64, previous: f64) -> f64 {
    use std::f64::consts::TAU;
    let turns = ((previous - principal) / TAU).round();
    principal + turns * TAU
}

/// Closed-form characteristic function of `model` on `grid`.
pub fn exact_cf(model: &ModelSpec, grid: UniformGrid) -> Result<ComplexSeries> {
    let values = grid
        .nodes()
        .map(|u| model.cf(u))
        .collect::<Result<Vec<_>>>()?;
    Ok(ComplexSeries { grid, values })
}

pub fn event_diagnostics(
    ecf: &ComplexSeries,
    exact: Option<&ComplexSeries>,
) -> Result<CfDiagnostics> {
    let min_modulus = ecf
        .values
        .iter()
        .map(|z| z.norm())
        .fold(f64::INFINITY, f64::min);
    let max_relative_deviation = match exact {
        None => None,
        Some(ex) => {
            if ex.grid != ecf.grid {
                return Err(QidError::GridMismatch);
            }
            Some(
                ecf.values
                    .iter()
                    .zip(&ex.values)
                    .map(|(a, b)| (a - b).norm() / b.norm())
                    .fold(0.0, f64::max),
            )
        }
    };
    Ok(CfDiagnostics {
        min_modulus,
        max_relative_deviation,
        u_max: ecf.grid.stop().abs().max(ecf.grid.start().abs()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HValidity {
    pub max_abs_h: f64,
    pub h_at_zero: Complex64,
    pub passes_necessary: bool,
}

pub const DEFAULT_H_TOLERANCE: f64 = 1e-9;

/// Necessary conditions for `H(u) = phi_circ(u) e^{u^2 sigma2 / 2}` to be a
/// characteristic function: `|H| <= 1` on the grid and `H(0) = 1`.
/// `H(0)` is read at the grid node closest to zero.
pub fn h_validity_check(phi_circ: &ComplexSeries, sigma2: f64, tol: f64) -> HValidity {
    let grid = phi_circ.grid;
    let h: Vec<Complex64> = grid
        .nodes()
        .zip(&phi_circ.values)
        .map(|(u, z)| z * (0.5 * u * u * sigma2).exp())
        .collect();
    let max_abs_h = h.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let k0 = grid
        .nodes()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(k, _)| k)
        .unwrap_or(0);
    let h_at_zero = h[k0];
    let passes_necessary = max_abs_h <= 1.0 + tol && (h_at_zero - 1.0).norm() <= tol;
    HValidity {
        max_abs_h,
        h_at_zero,
        passes_necessary,
    }
}
