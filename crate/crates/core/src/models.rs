//! Simulation models: seeded samplers plus closed-form characteristic
//! functions, densities, triplets and the signed jump density series.
//!
//! All mixtures have the form `p * N(0, sigma^2) + (1 - p) * mu_circ`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::curve::DensityCurve;
use crate::error::{QidError, Result};
use crate::grid::UniformGrid;
use crate::sample::Sample;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant")]
pub enum ModelSpec {
    /// `p N(0, sigma1_sq) + (1-p) N(0, sigma2_sq)`.
    TwoNormalMixture {
        p: f64,
        sigma1_sq: f64,
        sigma2_sq: f64,
    },
    /// `(1/2 + delta) N(0, sigma1^2) + (1/2 - delta)/5 * sum_j N(j/2 - 1, sigma2^2)`.
    /// Note the standard deviations, not variances.
    BartSimpsonModified {
        delta: f64,
        sigma1: f64,
        sigma2: f64,
    },
    /// `p N(0, sigma1_sq) + (1-p) (t_dof * N(0, sigma2_sq))` where `*` is convolution.
    StudentPlusNormalMixture {
        p: f64,
        dof: f64,
        sigma1_sq: f64,
        sigma2_sq: f64,
    },
    PureNormal {
        sigma_sq: f64,
    },
}

/// Bart Simpson spike locations.
const SPIKES: [f64; 5] = [-1.0, -0.5, 0.0, 0.5, 1.0];

impl ModelSpec {
    pub fn two_normal_benchmark() -> Self {
        Self::TwoNormalMixture {
            p: 0.75,
            sigma1_sq: 0.1,
            sigma2_sq: 0.5,
        }
    }

    pub fn bart_simpson_benchmark() -> Self {
        Self::BartSimpsonModified {
            delta: 0.001,
            sigma1: 0.05,
            sigma2: 0.1,
        }
    }

    pub fn student_benchmark() -> Self {
        Self::StudentPlusNormalMixture {
            p: 0.75,
            dof: 3.0,
            sigma1_sq: 0.2,
            sigma2_sq: 0.5,
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            Self::TwoNormalMixture { .. } => "two_normal",
            Self::BartSimpsonModified { .. } => "bart_simpson",
            Self::StudentPlusNormalMixture { .. } => "student_normal",
            Self::PureNormal { .. } => "pure_normal",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(QidError::BadSpec(format!("{}: {msg}", self.tag())));
        match *self {
            Self::TwoNormalMixture {
                p,
                sigma1_sq,
                sigma2_sq,
            } => {
                if !(p > 0.5 && p < 1.0) {
                    return bad("need 1/2 < p < 1");
                }
                if !(sigma1_sq > 0.0 && sigma1_sq < sigma2_sq && sigma2_sq.is_finite()) {
                    return bad("need 0 < sigma1_sq < sigma2_sq");
                }
            }
            Self::BartSimpsonModified {
                delta,
                sigma1,
                sigma2,
            } => {
                if !(delta > 0.0 && delta < 0.5) {
                    return bad("need 0 < delta < 1/2");
                }
                if !(sigma1 > 0.0 && sigma1 < sigma2 && sigma2.is_finite()) {
                    return bad("need 0 < sigma1 < sigma2");
                }
            }
            Self::StudentPlusNormalMixture {
                p,
                dof,
                sigma1_sq,
                sigma2_sq,
            } => {
                if !(p > 0.5 && p < 1.0) {
                    return bad("need 1/2 < p < 1");
                }
                if !(dof >= 3.0 && dof.is_finite()) {
                    return bad("need dof >= 3");
                }
                if !(sigma1_sq > 0.0 && sigma1_sq < sigma2_sq && sigma2_sq.is_finite()) {
                    return bad("need 0 < sigma1_sq < sigma2_sq");
                }
            }
            Self::PureNormal { sigma_sq } => {
                if !(sigma_sq > 0.0 && sigma_sq.is_finite()) {
                    return bad("need sigma_sq > 0");
                }
            }
        }
        Ok(())
    }

    /// Weight of the centred normal component.
    pub fn p(&self) -> f64 {
        match *self {
            Self::TwoNormalMixture { p, .. } | Self::StudentPlusNormalMixture { p, .. } => p,
            Self::BartSimpsonModified { delta, .. } => 0.5 + delta,
            Self::PureNormal { .. } => 1.0,
        }
    }

    /// Variance of the centred normal component.
    pub fn main_variance(&self) -> f64 {
        match *self {
            Self::TwoNormalMixture { sigma1_sq, .. }
            | Self::StudentPlusNormalMixture { sigma1_sq, .. } => sigma1_sq,
            Self::BartSimpsonModified { sigma1, .. } => sigma1 * sigma1,
            Self::PureNormal { sigma_sq } => sigma_sq,
        }
    }

    pub fn is_mixture(&self) -> bool {
        !matches!(self, Self::PureNormal { .. })
    }

    /// Rough scale of the law, used for default grids.
    pub fn scale(&self) -> f64 {
        match *self {
            Self::TwoNormalMixture { sigma2_sq, .. } => sigma2_sq.sqrt(),
            Self::BartSimpsonModified { sigma2, .. } => 1.0 + sigma2,
            Self::StudentPlusNormalMixture { dof, sigma2_sq, .. } => {
                (dof / (dof - 2.0) + sigma2_sq).sqrt()
            }
            Self::PureNormal { sigma_sq } => sigma_sq.sqrt(),
        }
    }

    /// Characteristic function at `u`.
    pub fn cf(&self, u: f64) -> Result<Complex64> {
        self.validate()?;
        let main = (-0.5 * self.main_variance() * u * u).exp();
        Ok(match *self {
            Self::PureNormal { .. } => Complex64::new(main, 0.0),
            _ => {
                let p = self.p();
                p * main + (1.0 - p) * self.contaminant_cf(u)?
            }
        })
    }

    /// Characteristic function of the contaminant `mu_circ`.
    pub fn contaminant_cf(&self, u: f64) -> Result<Complex64> {
        match *self {
            Self::TwoNormalMixture { sigma2_sq, .. } => {
                Ok(Complex64::new((-0.5 * sigma2_sq * u * u).exp(), 0.0))
            }
            Self::BartSimpsonModified { sigma2, .. } => {
                let damp = (-0.5 * sigma2 * sigma2 * u * u).exp();
                let osc: Complex64 = SPIKES
                    .iter()
                    .map(|m| Complex64::from_polar(1.0, m * u))
                    .sum::<Complex64>()
                    / 5.0;
                Ok(osc * damp)
            }
            Self::StudentPlusNormalMixture { dof, sigma2_sq, .. } => {
                if dof != 3.0 {
                    return Err(QidError::UnsupportedModel(format!(
                        "closed-form cf needs dof = 3, got {dof}"
                    )));
                }
                let a = 3f64.sqrt() * u.abs();
                Ok(Complex64::new(
                    (1.0 + a) * (-a).exp() * (-0.5 * sigma2_sq * u * u).exp(),
                    0.0,
                ))
            }
            Self::PureNormal { .. } => Err(QidError::BadSpec(
                "pure normal has no contaminant".to_string(),
            )),
        }
    }

    /// `H(u) = phi_circ(u) exp(u^2 sigma^2 / 2)`.
    pub fn h_function(&self, u: f64) -> Result<Complex64> {
        Ok(self.contaminant_cf(u)? * (0.5 * self.main_variance() * u * u).exp())
    }

    pub fn density(&self, x: f64) -> f64 {
        let main = normal_pdf(x, 0.0, self.main_variance());
        match self {
            Self::PureNormal { .. } => main,
            _ => {
                let p = self.p();
                p * main + (1.0 - p) * self.contaminant_density(x)
            }
        }
    }

    pub fn contaminant_density(&self, x: f64) -> f64 {
        match *self {
            Self::TwoNormalMixture { sigma2_sq, .. } => normal_pdf(x, 0.0, sigma2_sq),
            Self::BartSimpsonModified { sigma2, .. } => {
                SPIKES
                    .iter()
                    .map(|m| normal_pdf(x, *m, sigma2 * sigma2))
                    .sum::<f64>()
                    / 5.0
            }
            Self::StudentPlusNormalMixture { dof, sigma2_sq, .. } => {
                student_normal_convolution(x, dof, sigma2_sq)
            }
            Self::PureNormal { .. } => 0.0,
        }
    }
}

pub fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    (-0.5 * d * d / var).exp() / (2.0 * PI * var).sqrt()
}

pub fn student_pdf(x: f64, dof: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    let log_norm = ln_gamma(0.5 * (dof + 1.0)) - ln_gamma(0.5 * dof) - 0.5 * (dof * PI).ln();
    (log_norm - 0.5 * (dof + 1.0) * (1.0 + x * x / dof).ln()).exp()
}

/// Nodes in the Gaussian-weighted convolution quadrature.
const CONVOLUTION_NODES: usize = 2401;
/// Half-width of the convolution window in Gaussian standard deviations.
const CONVOLUTION_WIDTH: f64 = 12.0;

/// Density of `t_dof + N(0, var)` by trapezoid quadrature over the Gaussian
/// factor. The integrand is analytic and Gaussian-damped, so the rule is
/// accurate to near machine precision.
pub fn student_normal_convolution(x: f64, dof: f64, var: f64) -> f64 {
    let sd = var.sqrt();
    let half = CONVOLUTION_WIDTH * sd;
    let h = 2.0 * half / (CONVOLUTION_NODES - 1) as f64;
    let mut acc = 0.0;
    for k in 0..CONVOLUTION_NODES {
        let z = -half + k as f64 * h;
        let w = if k == 0 || k + 1 == CONVOLUTION_NODES {
            0.5
        } else {
            1.0
        };
        acc += w * normal_pdf(z, 0.0, var) * student_pdf(x - z, dof);
    }
    acc * h
}

/// Draws `n` observations. Deterministic in `(spec, n, seed)`.
pub fn sample_model(spec: &ModelSpec, n: usize, seed: u64) -> Result<Sample> {
    sample_model_stream(spec, n, seed, 0)
}

/// As [`sample_model`] on an independent ChaCha20 substream.
pub fn sample_model_stream(spec: &ModelSpec, n: usize, seed: u64, stream: u64) -> Result<Sample> {
    spec.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let values = draw(spec, n, &mut rng);
    Ok(Sample::new(values)?.with_provenance(Some(seed), Some(spec.tag().to_string())))
}

fn draw<R: Rng>(spec: &ModelSpec, n: usize, rng: &mut R) -> Vec<f64> {
    let main_sd = spec.main_variance().sqrt();
    let p = spec.p();
    let chi = match *spec {
        ModelSpec::StudentPlusNormalMixture { dof, .. } if !is_small_integer(dof) => {
            Some(ChiSquared::new(dof).expect("dof validated"))
        }
        _ => None,
    };
    (0..n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            if matches!(spec, ModelSpec::PureNormal { .. }) {
                return main_sd * z;
            }
            let from_main = rng.random::<f64>() < p;
            if from_main {
                return main_sd * z;
            }
            match *spec {
                ModelSpec::TwoNormalMixture { sigma2_sq, .. } => sigma2_sq.sqrt() * z,
                ModelSpec::BartSimpsonModified { sigma2, .. } => {
                    let j = rng.random_range(0..SPIKES.len());
                    SPIKES[j] + sigma2 * z
                }
                ModelSpec::StudentPlusNormalMixture { dof, sigma2_sq, .. } => {
                    let chi2 = match &chi {
                        Some(d) => d.sample(rng),
                        None => (0..dof as usize)
                            .map(|_| {
                                let g: f64 = rng.sample(StandardNormal);
                                g * g
                            })
                            .sum(),
                    };
                    let numer: f64 = rng.sample(StandardNormal);
                    numer / (chi2 / dof).sqrt() + sigma2_sq.sqrt() * z
                }
                ModelSpec::PureNormal { .. } => unreachable!(),
            }
        })
        .collect()
}

fn is_small_integer(x: f64) -> bool {
    x.fract() == 0.0 && x <= 64.0
}

pub fn exact_density(spec: &ModelSpec, x_grid: UniformGrid) -> Result<DensityCurve> {
    spec.validate()?;
    Ok(DensityCurve::from_fn(x_grid, |x| spec.density(x)))
}

/// Density of the contaminant component alone.
pub fn exact_g_circ(spec: &ModelSpec, x_grid: UniformGrid) -> Result<DensityCurve> {
    spec.validate()?;
    if !spec.is_mixture() {
        return Err(QidError::BadSpec(
            "contaminant density needs a mixture model".to_string(),
        ));
    }
    Ok(DensityCurve::from_fn(x_grid, |x| {
        spec.contaminant_density(x)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExactTriplet {
    pub gamma_star: f64,
    pub sigma2: f64,
    pub lambda_star: f64,
    pub p: f64,
}

/// Ground-truth triplet. All supported models are symmetric or have a
/// symmetric spike layout, so the drift is zero.
pub fn exact_triplet(spec: &ModelSpec) -> Result<ExactTriplet> {
    spec.validate()?;
    let p = spec.p();
    Ok(ExactTriplet {
        gamma_star: 0.0,
        sigma2: spec.main_variance(),
        lambda_star: -p.ln(),
        p,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuTildeSeriesConfig {
    pub max_terms: usize,
    pub tail_tol: f64,
}

impl Default for NuTildeSeriesConfig {
    fn default() -> Self {
        Self {
            max_terms: 60,
            tail_tol: 1e-12,
        }
    }
}

/// One Gaussian atom `weight * N(mean, var)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Atom {
    weight: f64,
    mean: f64,
    var: f64,
}

/// Signed Gaussian expansion of the jump density
/// `sum_m (-1)^(m+1)/m q^m Lambda^{*m}` with `q = (1-p)/p`.
#[derive(Debug, Clone, PartialEq)]
pub struct NuTildeSeries {
    atoms: Vec<Atom>,
    /// Number of convolution powers summed.
    pub terms: usize,
}

impl NuTildeSeries {
    pub fn new(spec: &ModelSpec, cfg: NuTildeSeriesConfig) -> Result<Self> {
        spec.validate()?;
        let p = spec.p();
        let q = (1.0 - p) / p;
        // Lambda has cf H; only Gaussian or Gaussian-mixture H admit closed-form powers.
        let (spikes, spike_step, diff_var): (Vec<f64>, f64, f64) = match *spec {
            ModelSpec::PureNormal { .. } => {
                return Ok(Self {
                    atoms: Vec::new(),
                    terms: 0,
                })
            }
            ModelSpec::TwoNormalMixture {
                sigma1_sq,
                sigma2_sq,
                ..
            } => (vec![1.0], 0.0, sigma2_sq - sigma1_sq),
            ModelSpec::BartSimpsonModified { sigma1, sigma2, .. } => {
                (vec![0.2; 5], 0.5, sigma2 * sigma2 - sigma1 * sigma1)
            }
            ModelSpec::StudentPlusNormalMixture { .. } => {
                return Err(QidError::UnsupportedModel(
                    "convolution powers of the Student component have no closed form".to_string(),
                ))
            }
        };
        let terms = (1..=cfg.max_terms)
            .find(|&m| q.powi(m as i32) / m as f64 <= cfg.tail_tol)
            .ok_or(QidError::SeriesNotConverged {
                max_terms: cfg.max_terms,
                tail_tol: cfg.tail_tol,
            })?;

        // Lambda^{*m}: spike-location polynomial raised to the m-th power,
        // locations start at m * SPIKES[0] when spikes are present.
        let offset = if spikes.len() > 1 { SPIKES[0] } else { 0.0 };
        let mut atoms = Vec::new();
        let mut poly = vec![1.0];
        for m in 1..=terms {
            poly = convolve(&poly, &spikes);
            let coef = if m % 2 == 1 { 1.0 } else { -1.0 } * q.powi(m as i32) / m as f64;
            for (s, w) in poly.iter().enumerate() {
                if *w == 0.0 {
                    continue;
                }
                atoms.push(Atom {
                    weight: coef * w,
                    mean: m as f64 * offset + s as f64 * spike_step,
                    var: m as f64 * diff_var,
                });
            }
        }
        Ok(Self { atoms, terms })
    }

    pub fn density(&self, x: f64) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.weight * normal_pdf(x, a.mean, a.var))
            .sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.weight).sum()
    }

    /// Fourier transform `int e^{iux} s(x) dx`, term by term.
    pub fn fourier(&self, u: f64) -> Complex64 {
        self.atoms
            .iter()
            .map(|a| {
                a.weight * (-0.5 * a.var * u * u).exp() * Complex64::from_polar(1.0, a.mean * u)
            })
            .sum()
    }
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Ground-truth jump density `s(x)` on `x_grid`.
pub fn nu_tilde_density(
    spec: &ModelSpec,
    x_grid: UniformGrid,
    cfg: NuTildeSeriesConfig,
) -> Result<DensityCurve> {
    let series = NuTildeSeries::new(spec, cfg)?;
    Ok(DensityCurve::from_fn(x_grid, |x| series.density(x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::trapezoid_integrate;

    #[test]
    fn spec_validation() {
        assert!(ModelSpec::two_normal_benchmark().validate().is_ok());
        assert!(ModelSpec::bart_simpson_benchmark().validate().is_ok());
        assert!(ModelSpec::student_benchmark().validate().is_ok());
        let bad = ModelSpec::TwoNormalMixture {
            p: 0.4,
            sigma1_sq: 0.1,
            sigma2_sq: 0.5,
        };
        assert!(matches!(bad.validate(), Err(QidError::BadSpec(_))));
        let bad = ModelSpec::TwoNormalMixture {
            p: 0.75,
            sigma1_sq: 0.5,
            sigma2_sq: 0.1,
        };
        assert!(bad.validate().is_err());
        assert!(sample_model(&bad, 10, 1).is_err());
    }

    #[test]
    fn empty_sample_and_determinism() {
        let spec = ModelSpec::two_normal_benchmark();
        assert!(sample_model(&spec, 0, 3).unwrap().is_empty());
        let a = sample_model(&spec, 100, 42).unwrap();
        let b = sample_model(&spec, 100, 42).unwrap();
        let c = sample_model(&spec, 100, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.values(), c.values());
        let d = sample_model_stream(&spec, 100, 42, 1).unwrap();
        assert_ne!(a.values(), d.values());
    }

    #[test]
    fn pure_normal_variance() {
        let n = 100_000;
        let s = sample_model(&ModelSpec::PureNormal { sigma_sq: 0.3 }, n, 7).unwrap();
        let tol = 3.0 * (2.0 / n as f64).sqrt() * 0.3;
        assert!((s.variance() - 0.3).abs() < tol, "{}", s.variance());
    }

    #[test]
    fn mixture_second_moment() {
        let n = 100_000;
        let s = sample_model(&ModelSpec::two_normal_benchmark(), n, 11).unwrap();
        let m2 = s.values().iter().map(|x| x * x).sum::<f64>() / n as f64;
        // fourth moment 3*(0.75*0.01 + 0.25*0.25) = 0.21, so sd of m2 ~ sqrt(0.17/n)
        assert!((m2 - 0.2).abs() < 4.0 * (0.17 / n as f64).sqrt(), "{m2}");
    }

    #[test]
    fn student_sampler_matches_tail_probability() {
        let spec = ModelSpec::student_benchmark();
        let n = 200_000;
        let s = sample_model(&spec, n, 5).unwrap();
        // P(X > 1.5) from the density by quadrature
        let g = UniformGrid::new(1.5, 80.0, 40_001).unwrap();
        let tail: Vec<f64> = g.nodes().map(|x| spec.density(x)).collect();
        let expected = trapezoid_integrate(&tail, &g).unwrap();
        let got = s.values().iter().filter(|x| **x > 1.5).count() as f64 / n as f64;
        let sd = (expected * (1.0 - expected) / n as f64).sqrt();
        assert!((got - expected).abs() < 5.0 * sd, "{got} vs {expected}");
    }

    #[test]
    fn densities_integrate_to_one() {
        let g = UniformGrid::new(-6.0, 6.0, 12_001).unwrap();
        let d = exact_density(&ModelSpec::two_normal_benchmark(), g).unwrap();
        assert!((d.integral() - 1.0).abs() < 1e-8);
        let g = UniformGrid::new(-3.0, 3.0, 12_001).unwrap();
        let d = exact_density(&ModelSpec::bart_simpson_benchmark(), g).unwrap();
        assert!((d.integral() - 1.0).abs() < 1e-8);
    }

    #[test]
    fn pure_normal_mode() {
        let spec = ModelSpec::PureNormal { sigma_sq: 0.3 };
        assert!((spec.density(0.0) - 1.0 / (2.0 * PI * 0.3).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn bart_simpson_has_five_spikes() {
        let g = UniformGrid::new(-1.5, 1.5, 3001).unwrap();
        let d = exact_density(&ModelSpec::bart_simpson_benchmark(), g).unwrap();
        let v = &d.values;
        let maxima: Vec<f64> = (1..v.len() - 1)
            .filter(|&k| v[k] > v[k - 1] && v[k] > v[k + 1])
            .map(|k| g.node(k))
            .collect();
        assert_eq!(maxima.len(), 5, "{maxima:?}");
        for (m, target) in maxima.iter().zip(SPIKES) {
            assert!((m - target).abs() < 0.02, "{m} vs {target}");
        }
    }

    #[test]
    fn mixture_decomposes_into_components() {
        let g = UniformGrid::new(-5.0, 5.0, 501).unwrap();
        for spec in [
            ModelSpec::two_normal_benchmark(),
            ModelSpec::bart_simpson_benchmark(),
            ModelSpec::student_benchmark(),
        ] {
            let d = exact_density(&spec, g).unwrap();
            let c = exact_g_circ(&spec, g).unwrap();
            let p = spec.p();
            for (k, x) in g.nodes().enumerate() {
                let rebuilt =
                    p * normal_pdf(x, 0.0, spec.main_variance()) + (1.0 - p) * c.values[k];
                assert!((rebuilt - d.values[k]).abs() < 1e-12);
            }
        }
        assert!(exact_g_circ(&ModelSpec::PureNormal { sigma_sq: 1.0 }, g).is_err());
    }

    #[test]
    fn bart_simpson_contaminant_formula() {
        let spec = ModelSpec::bart_simpson_benchmark();
        let x = 0.37;
        let expected: f64 = (0..5)
            .map(|j| normal_pdf(x, j as f64 / 2.0 - 1.0, 0.01))
            .sum::<f64>()
            / 5.0;
        assert!((spec.contaminant_density(x) - expected).abs() < 1e-14);
    }

    #[test]
    fn student_convolution_matches_fourier_inversion() {
        // g(x) = (1/pi) int_0^inf cf(u) cos(ux) du with the closed-form cf
        let spec = ModelSpec::student_benchmark();
        let ug = UniformGrid::new(0.0, 20.0, 20_001).unwrap();
        for x in [0.0, 0.4, 1.3, -2.2, 5.0] {
            let integrand: Vec<f64> = ug
                .nodes()
                .map(|u| spec.contaminant_cf(u).unwrap().re * (u * x).cos())
                .collect();
            let inv = trapezoid_integrate(&integrand, &ug).unwrap() / PI;
            let conv = spec.contaminant_density(x);
            assert!((inv - conv).abs() < 1e-9, "x={x}: {inv} vs {conv}");
            assert!((conv - spec.contaminant_density(-x)).abs() < 1e-10);
        }
        // unimodal
        let g = UniformGrid::new(0.0, 6.0, 601).unwrap();
        let c = exact_g_circ(&spec, g).unwrap();
        assert!(c.values.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn student_cf_needs_dof_three() {
        let spec = ModelSpec::StudentPlusNormalMixture {
            p: 0.75,
            dof: 5.0,
            sigma1_sq: 0.2,
            sigma2_sq: 0.5,
        };
        assert!(matches!(spec.cf(1.0), Err(QidError::UnsupportedModel(_))));
        assert!(sample_model(&spec, 10, 1).is_ok());
    }

    #[test]
    fn exact_triplets() {
        let t = exact_triplet(&ModelSpec::PureNormal { sigma_sq: 0.3 }).unwrap();
        assert_eq!(
            (t.gamma_star, t.sigma2, t.lambda_star, t.p),
            (0.0, 0.3, 0.0, 1.0)
        );
        let t = exact_triplet(&ModelSpec::two_normal_benchmark()).unwrap();
        assert_eq!(t.sigma2, 0.1);
        assert!((t.lambda_star + 0.75f64.ln()).abs() < 1e-15);
        let t = exact_triplet(&ModelSpec::bart_simpson_benchmark()).unwrap();
        assert!((t.sigma2 - 0.0025).abs() < 1e-15);
        assert!((t.lambda_star + 0.501f64.ln()).abs() < 1e-15);
        assert!((t.p - 0.501).abs() < 1e-15);
    }

    #[test]
    fn nu_tilde_coefficients_and_mass() {
        let spec = ModelSpec::two_normal_benchmark();
        let series = NuTildeSeries::new(&spec, NuTildeSeriesConfig::default()).unwrap();
        // term 3 weight (1/3)^3 / 3 with scale sqrt(3 * 0.4)
        let a = series.atoms[2];
        assert!((a.weight - 1.0 / 81.0).abs() < 1e-16);
        assert!((a.var - 1.2).abs() < 1e-14);
        assert!((series.total_mass() - (4.0f64 / 3.0).ln()).abs() < 1e-12);
        let g = UniformGrid::new(-40.0, 40.0, 16_001).unwrap();
        let d = nu_tilde_density(&spec, g, NuTildeSeriesConfig::default()).unwrap();
        assert!((d.integral() + 0.75f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn nu_tilde_vanishes_for_pure_normal() {
        let g = UniformGrid::new(-1.0, 1.0, 11).unwrap();
        let d = nu_tilde_density(
            &ModelSpec::PureNormal { sigma_sq: 1.0 },
            g,
            NuTildeSeriesConfig::default(),
        )
        .unwrap();
        assert!(d.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn nu_tilde_series_not_converged_near_half() {
        let g = UniformGrid::new(-1.0, 1.0, 11).unwrap();
        let err = nu_tilde_density(
            &ModelSpec::bart_simpson_benchmark(),
            g,
            NuTildeSeriesConfig::default(),
        );
        assert!(matches!(err, Err(QidError::SeriesNotConverged { .. })));
        let err = nu_tilde_density(
            &ModelSpec::student_benchmark(),
            g,
            NuTildeSeriesConfig::default(),
        );
        assert!(matches!(err, Err(QidError::UnsupportedModel(_))));
    }

    #[test]
    fn nu_tilde_bart_simpson_far_from_half() {
        // p = 0.8: the spike-mixture series converges and its Fourier transform
        // equals log(1 + q H).
        let spec = ModelSpec::BartSimpsonModified {
            delta: 0.3,
            sigma1: 0.05,
            sigma2: 0.1,
        };
        let series = NuTildeSeries::new(&spec, NuTildeSeriesConfig::default()).unwrap();
        assert!((series.total_mass() + 0.8f64.ln()).abs() < 1e-12);
        let q = 0.25;
        for u in [0.5, 3.0, 11.0] {
            let h = spec.h_function(u).unwrap();
            let expected = (1.0 + q * h).ln();
            assert!((series.fourier(u) - expected).norm() < 1e-11);
        }
    }
}
