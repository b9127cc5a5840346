use thiserror::Error;

/// Errors raised by the estimation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("input contains a non-finite value")]
    NonFiniteInput,
    #[error("dimension too small: need at least {min}, got {got}")]
    DimensionTooSmall { min: usize, got: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("sample covariance is singular; an unpenalized fit needs it positive definite")]
    SingularSample,
    #[error("variable {index} has zero variance")]
    ZeroVariance { index: usize },
    #[error("invalid tuning parameters: {0}")]
    InvalidLambda(&'static str),
    #[error("invalid options: {0}")]
    InvalidOptions(&'static str),
    #[error("BIC2 requires equal sample sizes across subjects")]
    UnequalSampleSizes,
    #[error("no feasible point in the tuning grid")]
    EmptyFeasibleGrid,
    #[error("invalid simulation scenario: {0}")]
    InvalidScenario(&'static str),
    #[error("edge ({0}, {1}) is out of range or a self-loop")]
    InvalidEdge(usize, usize),
    #[error("row {row} has edges but a zero scaling denominator")]
    DegenerateGraph { row: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
