use thiserror::Error;

/// Errors produced by the relational evolution library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension cap exceeded: {requested} > {cap}")]
    DimensionCap { requested: usize, cap: usize },

    #[error("incompatible dimensions: {0}")]
    DimensionMismatch(String),

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("not a density matrix: {0}")]
    NotDensityMatrix(String),

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("diagonalization failed")]
    DiagonalizationFailed,

    #[error("exponent overflow (max real exponent {0})")]
    ExponentOverflow(f64),

    #[error("environment too small: d_env = {d_env} < D = {d_sys}")]
    EnvironmentTooSmall { d_sys: usize, d_env: usize },

    #[error("basis is not unitary (deviation {0:e})")]
    NotUnitary(f64),

    #[error("invalid Schmidt coefficients: {0}")]
    InvalidSchmidt(String),

    #[error("invalid conditioning: {0}")]
    InvalidConditioning(String),

    #[error("state unsupported by conditioning")]
    UnsupportedByConditioning,

    #[error("global state carries no total energy")]
    MissingEnergy,

    #[error("insufficient grid: need at least 3 points, got {0}")]
    InsufficientGrid(usize),

    #[error("integration diverged at step {0}")]
    IntegrationDiverged(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
