//! Estimation of the Gaussian, drift and jump parts of a sample from a
//! normal-plus-contaminant mixture through its empirical characteristic
//! function.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod charfn;
pub mod curve;
pub mod em;
pub mod error;
pub mod grid;
pub mod kernel;
pub mod mixture;
pub mod models;
pub mod sample;
pub mod spectral;
pub mod study;
pub mod weights;

pub use error::{QidError, Result};
pub use grid::UniformGrid;
pub use models::ModelSpec;
pub use sample::Sample;
pub use spectral::{full_pipeline, PipelineConfig, PipelineOutput, TripletEstimate};
pub use study::{run_study, run_study_timed, StudyConfig, StudyReport};
