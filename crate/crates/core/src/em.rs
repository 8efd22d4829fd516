//! EM for a two-component mixture of zero-mean normals.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{QidError, Result};
use crate::sample::Sample;

const MIN_VARIANCE: f64 = 1e-12;
const MIN_SAMPLE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub enum EmInit {
    /// Split at the median of `|x|`; each half's second moment seeds one
    /// component, weights start at 1/2.
    #[default]
    MomentInit,
    Fixed {
        p0: f64,
        s1_0: f64,
        s2_0: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmConfig {
    pub max_iters: usize,
    pub loglik_tol: f64,
    pub init: EmInit,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            max_iters: 200,
            loglik_tol: 1e-6,
            init: EmInit::MomentInit,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(QidError::InvalidConfig(
                "max_iters must be at least 1".into(),
            ));
        }
        if !(self.loglik_tol > 0.0) {
            return Err(QidError::InvalidConfig(format!(
                "loglik_tol must be positive, got {}",
                self.loglik_tol
            )));
        }
        if let EmInit::Fixed { p0, s1_0, s2_0 } = self.init {
            if !(p0 > 0.0 && p0 < 1.0) || !(s1_0 > 0.0) || !(s2_0 > 0.0) {
                return Err(QidError::InvalidConfig(format!(
                    "bad EM start ({p0}, {s1_0}, {s2_0})"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmResult {
    /// Weight of the smaller-variance component.
    pub p_hat: f64,
    pub sigma1_sq_hat: f64,
    pub sigma2_sq_hat: f64,
    /// Log-likelihood after each iteration.
    pub loglik_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Params {
    w: [f64; 2],
    var: [f64; 2],
}

/// Neumaier-compensated running sum.
#[derive(Default)]
struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

fn log_normal(x2: f64, var: f64) -> f64 {
    -0.5 * (2.0 * PI * var).ln() - 0.5 * x2 / var
}

/// Posterior component probabilities for one observation, plus its log density.
fn posterior(x: f64, p: &Params) -> ([f64; 2], f64) {
    let x2 = x * x;
    let la = p.w[0].ln() + log_normal(x2, p.var[0]);
    let lb = p.w[1].ln() + log_normal(x2, p.var[1]);
    let m = la.max(lb);
    let (ea, eb) = ((la - m).exp(), (lb - m).exp());
    let tot = ea + eb;
    ([ea / tot, eb / tot], m + tot.ln())
}

/// One E-step followed by one M-step. Also returns the log-likelihood at `p`,
/// which the E-step computes along the way.
fn em_step(xs: &[f64], p: &Params) -> Result<(Params, f64)> {
    let mut resp = [KahanSum::default(), KahanSum::default()];
    let mut moment = [KahanSum::default(), KahanSum::default()];
    let mut ll = KahanSum::default();
    for x in xs {
        let (r, lx) = posterior(*x, p);
        ll.add(lx);
        for c in 0..2 {
            resp[c].add(r[c]);
            moment[c].add(r[c] * x * x);
        }
    }
    let n = xs.len() as f64;
    let mut next = *p;
    for c in 0..2 {
        let r = resp[c].value();
        let var = if r > 0.0 { moment[c].value() / r } else { 0.0 };
        if !(var >= MIN_VARIANCE) {
            return Err(QidError::DegenerateComponent(var));
        }
        next.w[c] = r / n;
        next.var[c] = var;
    }
    Ok((next, ll.value()))
}

fn moment_init(xs: &[f64]) -> Params {
    let mut sq: Vec<f64> = xs.iter().map(|x| x * x).collect();
    sq.sort_by(f64::total_cmp);
    let half = sq.len() / 2;
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    Params {
        w: [0.5, 0.5],
        var: [mean(&sq[..half]), mean(&sq[half..])],
    }
}

pub fn em_fit(sample: &Sample, cfg: &EmConfig) -> Result<EmResult> {
    cfg.validate()?;
    let xs = sample.values();
    if xs.len() < MIN_SAMPLE {
        return Err(QidError::InvalidConfig(format!(
            "EM needs at least {MIN_SAMPLE} observations, got {}",
            xs.len()
        )));
    }
    let mut params = match cfg.init {
        EmInit::MomentInit => moment_init(xs),
        EmInit::Fixed { p0, s1_0, s2_0 } => Params {
            w: [p0, 1.0 - p0],
            var: [s1_0, s2_0],
        },
    };
    if params.var.iter().any(|v| !(*v >= MIN_VARIANCE)) {
        return Err(QidError::DegenerateComponent(
            params.var[0].min(params.var[1]),
        ));
    }
    let (mut next, mut prev) = em_step(xs, &params)?;
    let mut trace = Vec::new();
    let mut converged = false;
    for _ in 0..cfg.max_iters {
        params = next;
        // likelihood of the freshly updated parameters, plus the following update
        let (after, ll) = em_step(xs, &params)?;
        trace.push(ll);
        if ll - prev < cfg.loglik_tol {
            converged = true;
            break;
        }
        prev = ll;
        next = after;
    }
    let (small, large) = if params.var[0] <= params.var[1] {
        (0, 1)
    } else {
        (1, 0)
    };
    Ok(EmResult {
        p_hat: params.w[small],
        sigma1_sq_hat: params.var[small],
        sigma2_sq_hat: params.var[large],
        iterations: trace.len(),
        loglik_trace: trace,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{sample_model, ModelSpec};

    fn monotone(trace: &[f64]) -> bool {
        trace.windows(2).all(|w| w[1] >= w[0] - 1e-10)
    }

    #[test]
    fn recovers_benchmark_mixture() {
        let s = sample_model(&ModelSpec::two_normal_benchmark(), 10_000, 17).unwrap();
        let r = em_fit(&s, &EmConfig::default()).unwrap();
        assert!(r.iterations > 1);
        assert!((r.p_hat - 0.75).abs() < 0.08, "{r:?}");
        assert!((r.sigma1_sq_hat - 0.1).abs() < 0.03);
        assert!((r.sigma2_sq_hat - 0.5).abs() < 0.15);
        assert!(monotone(&r.loglik_trace));
    }

    #[test]
    fn single_normal_still_monotone() {
        let s = sample_model(&ModelSpec::PureNormal { sigma_sq: 0.3 }, 5_000, 2).unwrap();
        let r = em_fit(&s, &EmConfig::default()).unwrap();
        assert!(monotone(&r.loglik_trace));
        let mix_var = r.p_hat * r.sigma1_sq_hat + (1.0 - r.p_hat) * r.sigma2_sq_hat;
        let second_moment = s.values().iter().map(|x| x * x).sum::<f64>() / 5000.0;
        // the M-step preserves the weighted second moment exactly
        assert!((mix_var - second_moment).abs() < 1e-9);
        assert!((mix_var - 0.3).abs() < 0.03);
    }

    #[test]
    fn iteration_cap() {
        let s = sample_model(&ModelSpec::two_normal_benchmark(), 1000, 5).unwrap();
        let cfg = EmConfig {
            max_iters: 1,
            ..Default::default()
        };
        let r = em_fit(&s, &cfg).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(!r.converged);
    }

    #[test]
    fn label_swap_invariance() {
        let s = sample_model(&ModelSpec::two_normal_benchmark(), 3000, 6).unwrap();
        let a = EmConfig {
            init: EmInit::Fixed {
                p0: 0.25,
                s1_0: 0.05,
                s2_0: 1.0,
            },
            ..Default::default()
        };
        let b = EmConfig {
            init: EmInit::Fixed {
                p0: 0.75,
                s1_0: 1.0,
                s2_0: 0.05,
            },
            ..Default::default()
        };
        let ra = em_fit(&s, &a).unwrap();
        let rb = em_fit(&s, &b).unwrap();
        assert_eq!(ra.p_hat, rb.p_hat);
        assert_eq!(ra.sigma1_sq_hat, rb.sigma1_sq_hat);
        assert_eq!(ra.sigma2_sq_hat, rb.sigma2_sq_hat);
        assert_eq!(ra.iterations, rb.iterations);
    }

    #[test]
    fn responsibilities_sum_to_one() {
        let p = Params {
            w: [0.2, 0.8],
            var: [1e-3, 4.0],
        };
        for x in [-50.0, -3.0, 0.0, 1e-4, 0.7, 20.0] {
            let (r, ll) = posterior(x, &p);
            assert!((r[0] + r[1] - 1.0).abs() < 1e-12);
            assert!(ll.is_finite());
        }
    }

    #[test]
    fn rejects_bad_input() {
        let tiny = Sample::new(vec![0.1; 5]).unwrap();
        assert!(em_fit(&tiny, &EmConfig::default()).is_err());
        let zeros = Sample::new(vec![0.0; 20]).unwrap();
        assert!(matches!(
            em_fit(&zeros, &EmConfig::default()),
            Err(QidError::DegenerateComponent(_))
        ));
        let cfg = EmConfig {
            max_iters: 0,
            ..Default::default()
        };
        let s = sample_model(&ModelSpec::two_normal_benchmark(), 100, 1).unwrap();
        assert!(em_fit(&s, &cfg).is_err());
    }

    #[test]
    fn kahan_beats_naive() {
        let mut k = KahanSum::default();
        for x in [1e16, 1.0, -1e16] {
            k.add(x);
        }
        assert_eq!(k.value(), 1.0);
    }
}
