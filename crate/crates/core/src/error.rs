use thiserror::Error;

/// Errors raised anywhere in the simulation and reconstruction pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum TomoError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid too narrow: edge amplitude {edge_amplitude:.3e} exceeds {threshold:.1e}")]
    GridTooNarrow { edge_amplitude: f64, threshold: f64 },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("tracking observable Y_theta requires a symmetric preparation (2 b1 b2 = 1), got b1={b1}, b2={b2}")]
    NonSymmetricPreparation { b1: f64, b2: f64 },

    #[error("quadrature did not converge: {0}")]
    QuadratureNonConvergence(String),

    #[error("evaluation budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("ramp cutoff {eta_max} exceeds the sampling limit {limit}")]
    NyquistViolation { eta_max: f64, limit: f64 },

    #[error("angle coverage: {0}")]
    AngleCoverage(String),

    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),

    #[error("malformed file: {0}")]
    MalformedFile(String),

    #[error("wavefunction samples are not on a uniform grid: {0}")]
    NonUniformGrid(String),

    #[error("wavefunction norm {norm} is outside the renormalization slack")]
    NormOutOfRange { norm: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl TomoError {
    /// Process exit status for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        use TomoError::*;
        match self {
            Config(_)
            | MalformedFile(_)
            | NonUniformGrid(_)
            | NormOutOfRange { .. }
            | InvalidParameter(_)
            | NonSymmetricPreparation { .. }
            | UnsupportedConfiguration(_)
            | NyquistViolation { .. }
            | AngleCoverage(_) => 2,
            BudgetExceeded(_) | QuadratureNonConvergence(_) => 3,
            InvalidGrid(_) | GridTooNarrow { .. } | GridMismatch(_) => 4,
            Io(_) => 1,
        }
    }
}

impl From<std::io::Error> for TomoError {
    fn from(e: std::io::Error) -> Self {
        TomoError::Io(e.to_string())
    }
}

impl From<csv::Error> for TomoError {
    fn from(e: csv::Error) -> Self {
        TomoError::MalformedFile(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, TomoError>;
