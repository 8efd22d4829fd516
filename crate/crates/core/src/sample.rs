use serde::{Deserialize, Serialize};

use crate::error::{QidError, Result};

/// Observations with optional provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct Sample {
    values: Vec<f64>,
    pub seed: Option<u64>,
    pub model_tag: Option<String>,
}

impl Sample {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(QidError::NonFiniteValue(i));
        }
        Ok(Self {
            values,
            seed: None,
            model_tag: None,
        })
    }

    pub fn with_provenance(mut self, seed: Option<u64>, model_tag: Option<String>) -> Self {
        self.seed = seed;
        self.model_tag = model_tag;
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn require_non_empty(&self) -> Result<()> {
        if self.values.is_empty() {
            Err(QidError::EmptySample)
        } else {
            Ok(())
        }
    }

    /// Same observations shifted by `c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|x| x + c).collect(),
            seed: self.seed,
            model_tag: self.model_tag.clone(),
        }
    }

    /// Same observations multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|x| x * c).collect(),
            seed: self.seed,
            model_tag: self.model_tag.clone(),
        }
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let n = self.values.len() as f64;
        let m = self.mean();
        self.values.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0)
    }

    /// Writes one value per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.values.len() * 20);
        for v in &self.values {
            out.push_str(&format!("{v:?}\n"));
        }
        out
    }
}
