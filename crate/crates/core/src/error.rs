use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid stochastic matrix: {0}")]
    InvalidMatrix(String),
    #[error("chain is not irreducible")]
    NotIrreducible,
    #[error("Perron eigenvector did not converge (residual {residual:e} after {iterations} iterations)")]
    EigenNoConvergence { residual: f64, iterations: usize },
    #[error("supplied distribution is not stationary (deviation {0:e})")]
    NotStationary(f64),
    #[error("support mismatch at state {state}: reference mass {mass:e} where the other kernel is zero")]
    SupportMismatch { state: usize, mass: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid emission map: {0}")]
    InvalidEmission(String),
    #[error("assumption {0} violated by the base matrix")]
    AssumptionViolated(&'static str),
    #[error("need at least two arms, got {0}")]
    TooFewArms(usize),
    #[error("mean service time is zero")]
    ZeroMeanService,
    #[error("best arm is not unique (arms {0} and {1} tie)")]
    NonUniqueBestArm(usize, usize),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("fixed initial state {state} out of range for arm {arm}")]
    BadFixedState { arm: usize, state: usize },
    #[error("regeneration block on arm {arm} exceeded {cap} pulls")]
    BlockOverrun { arm: usize, cap: u64 },
    #[error("no samples available for arm {0}")]
    NoSamples(usize),
    #[error("bracket does not straddle the root: J({lo}) and J({hi}) share a sign")]
    BadBracket { lo: f64, hi: f64 },
    #[error("arm {0} has zero optimality gap")]
    ZeroGap(usize),
    #[error("expected a {expected} model, got {got}")]
    WrongShape { expected: String, got: String },
    #[error("derivative of the cost in theta vanishes ({0:e})")]
    VanishingDerivative(f64),
    #[error("finite-difference derivative is unstable (h: {coarse:e}, h/2: {fine:e})")]
    UnstableDerivative { coarse: f64, fine: f64 },
    #[error("config error at `{key}`: {message}")]
    Parse { key: String, message: String },
    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
