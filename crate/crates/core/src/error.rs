use thiserror::Error;

/// Errors raised by the identifiability and estimation routines.
///
/// Every variant has a stable machine-readable name (see [`IdentError::kind`]) that the
/// command line surfaces in its JSON error payloads.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum IdentError {
    #[error("input contains NaN or infinite values")]
    NonFinite,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("repeated eigenvalues at index pairs {pairs:?}")]
    RepeatedEigenvalues { pairs: Vec<(usize, usize)> },
    #[error("repeated eigenvalue has a nilpotent (defective) Jordan component")]
    DefectiveBlock,
    #[error("no repeated eigenvalue present")]
    NoRepeatedEigenvalue,
    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("block set is empty")]
    EmptyBlockSet,
    #[error("initial condition is the zero vector")]
    ZeroInitialCondition,
    #[error("system is identifiable at this initial condition; the class is a single matrix")]
    FullyIdentifiable,
    #[error("matrix exponential overflowed")]
    Overflow,
    #[error("time grid invalid: {0}")]
    InvalidGrid(String),
    #[error("trajectories live on different time grids")]
    GridMismatch,
    #[error("time grid is not uniformly spaced")]
    NonUniformGrid,
    #[error("spline system is ill-conditioned (condition {cond:e})")]
    IllConditionedBasis { cond: f64 },
    #[error("Gram matrix is numerically singular (condition {cond:e})")]
    SingularGram { cond: f64 },
    #[error("relative error undefined for a zero truth matrix")]
    ZeroTruth,
    #[error("need at least {needed} time points, got {got}")]
    TooFewTimePoints { needed: usize, got: usize },
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("resampling limit of {0} reached")]
    ResampleLimit(usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("io error: {0}")]
    Io(String),
}

impl IdentError {
    /// Stable variant name.
    pub fn kind(&self) -> &'static str {
        match self {
            IdentError::NonFinite => "NonFinite",
            IdentError::DimensionMismatch(_) => "DimensionMismatch",
            IdentError::NotSquare { .. } => "NotSquare",
            IdentError::RepeatedEigenvalues { .. } => "RepeatedEigenvalues",
            IdentError::DefectiveBlock => "DefectiveBlock",
            IdentError::NoRepeatedEigenvalue => "NoRepeatedEigenvalue",
            IdentError::IndexOutOfRange { .. } => "IndexOutOfRange",
            IdentError::EmptyBlockSet => "EmptyBlockSet",
            IdentError::ZeroInitialCondition => "ZeroInitialCondition",
            IdentError::FullyIdentifiable => "FullyIdentifiable",
            IdentError::Overflow => "Overflow",
            IdentError::InvalidGrid(_) => "InvalidGrid",
            IdentError::GridMismatch => "GridMismatch",
            IdentError::NonUniformGrid => "NonUniformGrid",
            IdentError::IllConditionedBasis { .. } => "IllConditionedBasis",
            IdentError::SingularGram { .. } => "SingularGram",
            IdentError::ZeroTruth => "ZeroTruth",
            IdentError::TooFewTimePoints { .. } => "TooFewTimePoints",
            IdentError::DegenerateInput(_) => "DegenerateInput",
            IdentError::ResampleLimit(_) => "ResampleLimit",
            IdentError::InvalidParameter(_) => "InvalidParameter",
            IdentError::Parse(_) => "Parse",
            IdentError::Io(_) => "Io",
        }
    }
}

impl From<std::io::Error> for IdentError {
    fn from(e: std::io::Error) -> Self {
        IdentError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, IdentError>;
