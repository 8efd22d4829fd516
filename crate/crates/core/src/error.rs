use thiserror::Error;

/// Errors raised by the estimation pipeline and its building blocks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QidError {
    #[error("length mismatch: expected {expected} values, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grids do not match")]
    GridMismatch,

    #[error("n must be positive")]
    NonPositiveN,

    #[error("bandwidth must be positive, got {0}")]
    NonPositiveBandwidth(f64),

    #[error("sample is empty")]
    EmptySample,

    #[error("sample contains a non-finite value at index {0}")]
    NonFiniteValue(usize),

    #[error("|cf| = {modulus:e} at u = {u} (node {index}) is at or below the floor {floor:e}")]
    NearZeroModulus {
        index: usize,
        u: f64,
        modulus: f64,
        floor: f64,
    },

    #[error("frequency grid does not contain u = 0")]
    MissingAnchor,

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("epsilon must lie in (0, 1), got {0}")]
    BadEpsilon(f64),

    #[error("normal equations are singular (determinant {0:e})")]
    SingularSystem(f64),

    #[error("frequency band [{lo}, {hi}] holds only {nodes} grid nodes")]
    GridTooCoarse { lo: f64, hi: f64, nodes: usize },

    #[error("cutoff T = {cutoff} exceeds the trusted band [0, {u_max}]")]
    BadCutoff { cutoff: f64, u_max: f64 },

    #[error("p_hat = {p_hat} is not below {floor}; decontamination is unstable")]
    PTooCloseToOne { p_hat: f64, floor: f64 },

    #[error("variance estimate must be positive, got {0}")]
    NonPositiveVariance(f64),

    #[error("invalid model parameters: {0}")]
    BadSpec(String),

    #[error("series did not reach tolerance {tail_tol:e} within {max_terms} terms")]
    SeriesNotConverged { max_terms: usize, tail_tol: f64 },

    #[error("EM component collapsed (variance {0:e})")]
    DegenerateComponent(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl QidError {
    /// Variant name, for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Self::LengthMismatch { .. } => "LengthMismatch",
            Self::InvalidGrid(_) => "InvalidGrid",
            Self::GridMismatch => "GridMismatch",
            Self::NonPositiveN => "NonPositiveN",
            Self::NonPositiveBandwidth(_) => "NonPositiveBandwidth",
            Self::EmptySample => "EmptySample",
            Self::NonFiniteValue(_) => "NonFiniteValue",
            Self::NearZeroModulus { .. } => "NearZeroModulus",
            Self::MissingAnchor => "MissingAnchor",
            Self::UnsupportedModel(_) => "UnsupportedModel",
            Self::BadEpsilon(_) => "BadEpsilon",
            Self::SingularSystem(_) => "SingularSystem",
            Self::GridTooCoarse { .. } => "GridTooCoarse",
            Self::BadCutoff { .. } => "BadCutoff",
            Self::PTooCloseToOne { .. } => "PTooCloseToOne",
            Self::NonPositiveVariance(_) => "NonPositiveVariance",
            Self::BadSpec(_) => "BadSpec",
            Self::SeriesNotConverged { .. } => "SeriesNotConverged",
            Self::DegenerateComponent(_) => "DegenerateComponent",
            Self::InvalidConfig(_) => "InvalidConfig",
        }
    }
}

pub type Result<T> = std::result::Result<T, QidError>;
