use thiserror::Error;

/// Errors shared across the geometry, dynamics and Hamilton-Jacobi layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("operation not defined for {0} structures")]
    UnsupportedStructure(&'static str),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite input: {0}")]
    NonFinite(String),

    #[error("singular linear system in sharp")]
    SingularMatrix,

    #[error("one-form has dp or dt components; vertical lift needs a horizontal form")]
    NonHorizontalForm,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("singularity guard: {0}")]
    Singularity(String),

    #[error("step limit exceeded after {0} steps")]
    StepLimitExceeded(usize),

    #[error("state became non-finite at s = {0}")]
    NonFiniteState(f64),

    #[error("characteristic curves crossed at t = {0}")]
    CharacteristicsCrossed(f64),

    #[error("root finding failed: {0}")]
    RootFindFailure(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;
