use serde::{Deserialize, Serialize};

use crate::error::{QidError, Result};
use crate::grid::UniformGrid;

/// Real function values on a uniform x-grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityCurve {
    pub x_grid: UniformGrid,
    pub values: Vec<f64>,
}

impl DensityCurve {
    pub fn new(x_grid: UniformGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != x_grid.count() {
            return Err(QidError::LengthMismatch {
                expected: x_grid.count(),
                actual: values.len(),
            });
        }
        Ok(Self { x_grid, values })
    }

    pub fn from_fn(x_grid: UniformGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = x_grid.nodes().map(f).collect();
        Self { x_grid, values }
    }

    pub fn zeros(x_grid: UniformGrid) -> Self {
        Self {
            x_grid,
            values: vec![0.0; x_grid.count()],
        }
    }

    pub fn integral(&self) -> f64 {
        crate::grid::trapezoid_uniform(&self.values, self.x_grid.spacing())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,value\n");
        for (x, v) in self.x_grid.nodes().zip(&self.values) {
            out.push_str(&format!("{x:?},{v:?}\n"));
        }
        out
    }
}
