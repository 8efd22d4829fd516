//! Uniform endpoint-inclusive grids and trapezoid quadrature.

use std::ops::{Add, Mul};

use serde::{Deserialize, Serialize};

use crate::error::{QidError, Result};

/// `count` equally spaced nodes on `[start, stop]`, both endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    start: f64,
    stop: f64,
    count: usize,
}

impl UniformGrid {
    pub fn new(start: f64, stop: f64, count: usize) -> Result<Self> {
        if !start.is_finite() || !stop.is_finite() {
            return Err(QidError::InvalidGrid(format!(
                "non-finite bounds [{start}, {stop}]"
            )));
        }
        if count < 2 {
            return Err(QidError::InvalidGrid(format!("count {count} < 2")));
        }
        if stop <= start {
            return Err(QidError::InvalidGrid(format!(
                "stop {stop} must exceed start {start}"
            )));
        }
        Ok(Self { start, stop, count })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn stop(&self) -> f64 {
        self.stop
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn spacing(&self) -> f64 {
        (self.stop - self.start) / (self.count - 1) as f64
    }

    /// Node `k`. The last node is returned as `stop` exactly.
    #[inline]
    pub fn node(&self, k: usize) -> f64 {
        if k + 1 == self.count {
            self.stop
        } else {
            self.start + k as f64 * self.spacing()
        }
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.count).map(move |k| self.node(k))
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.nodes().collect()
    }

    /// Index of a node equal to zero, if the grid has one.
    pub fn zero_index(&self) -> Option<usize> {
        if self.start > 0.0 || self.stop < 0.0 {
            return None;
        }
        let k = (-self.start / self.spacing()).round() as usize;
        (k < self.count && self.node(k).abs() <= 1e-12 * self.spacing()).then_some(k)
    }

    /// Contiguous index range of nodes inside `[lo, hi]`, with a relative slack
    /// of 1e-9 spacings so that band edges landing on nodes are kept.
    pub fn index_band(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let h = self.spacing();
        let slack = 1e-9;
        let first = ((lo - self.start) / h - slack).ceil().max(0.0) as usize;
        let last = ((hi - self.start) / h + slack).floor();
        if last < 0.0 {
            return 0..0;
        }
        let end = (last as usize + 1).min(self.count);
        first.min(end)..end
    }

    /// Trapezoid weights (`h/2` at the ends, `h` inside).
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        trapezoid_weights(self.count, self.spacing())
    }
}

pub(crate) fn trapezoid_weights(count: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; count];
    if let Some(first) = w.first_mut() {
        *first = 0.5 * h;
    }
    if count > 1 {
        w[count - 1] = 0.5 * h;
    }
    w
}

/// Trapezoid rule for values sampled on `grid`. Works for real and complex
/// integrands alike.
pub fn trapezoid_integrate<T>(values: &[T], grid: &UniformGrid) -> Result<T>
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T> + Default,
{
    if values.len() != grid.count() {
        return Err(QidError::LengthMismatch {
            expected: grid.count(),
            actual: values.len(),
        });
    }
    Ok(trapezoid_uniform(values, grid.spacing()))
}

/// Trapezoid rule on uniformly spaced samples; `values.len() >= 2` is not checked.
pub(crate) fn trapezoid_uniform<T>(values: &[T], h: f64) -> T
where
    T: Copy + Add<Output = T> + Mul<f64, Output = T> + Default,
{
    match values {
        [] | [_] => T::default(),
        [first, inner @ .., last] => {
            let mut acc = (*first + *last) * 0.5;
            for v in inner {
                acc = acc + *v;
            }
            acc * h
        }
    }
}
