//! Smoothing kernel and the bandwidth rule used by the density estimators.

use serde::{Deserialize, Serialize};

use crate::error::{QidError, Result};

/// Default constant in `h = c * n^(-1/5)`.
pub const DEFAULT_BANDWIDTH_C: f64 = 1.0 / 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum KernelKind {
    #[default]
    Epanechnikov,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub support_radius: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self {
            kind: KernelKind::Epanechnikov,
            support_radius: 1.0,
        }
    }
}

impl KernelSpec {
    #[inline]
    pub fn evaluate(&self, u: f64) -> f64 {
        match self.kind {
            KernelKind::Epanechnikov => epanechnikov(u / self.support_radius) / self.support_radius,
        }
    }
}

/// `K(u) = 3/4 (1 - u^2)` on `|u| <= 1`, zero elsewhere.
#[inline]
pub fn epanechnikov(u: f64) -> f64 {
    if u.abs() <= 1.0 {
        0.75 * (1.0 - u * u)
    } else {
        0.0
    }
}

/// `c * n^(-1/5)`.
pub fn bandwidth_rule(n: usize, c: f64) -> Result<f64> {
    if n == 0 {
        return Err(QidError::NonPositiveN);
    }
    if !(c > 0.0) {
        return Err(QidError::NonPositiveBandwidth(c));
    }
    Ok(c * (n as f64).powf(-0.2))
}
