use thiserror::Error;

/// Every failure the library reports. Variants carry enough context to be
/// printed as a one-line diagnostic by the CLI.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid integration step {0}")]
    InvalidStep(f64),

    #[error("radius {r} outside the tabulated domain [0, {r_max}]")]
    OutOfDomain { r: f64, r_max: f64 },

    #[error("warping function vanishes at r = {0}")]
    NonPositiveWarping(f64),

    #[error("model is not subcritical: {0}")]
    NotSubcritical(String),

    #[error("subcriticality test inconclusive: {0}")]
    Inconclusive(String),

    #[error("closed form available only for alpha in {{1, 2}}, got {0}")]
    UnsupportedAlpha(f64),

    #[error("recursion produced a non-positive quotient at r = {0}")]
    NonPositiveQuotient(f64),

    #[error("total pole mass {0} exceeds 1")]
    MassExceeded(f64),

    #[error("exponent p = {0} is not supported for this operation")]
    UnsupportedExponent(f64),

    #[error("potential is singular at r = {0} where the test function is nonzero")]
    SingularPotential(f64),

    #[error("reference function is non-positive ({value}) at node {node}")]
    NonPositiveG { node: usize, value: f64 },

    #[error("ratio of the two functions is unbounded near node {0}")]
    UnboundedRatio(usize),

    #[error("mesh has no interior degrees of freedom")]
    NoInteriorDof,

    #[error("operator is not coercive: fundamental tone {0}")]
    NotCoercive(f64),

    #[error("iteration did not converge after {iterations} steps (residual {residual:e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("nonlinearity violates its contract: {0}")]
    BadNonlinearity(String),

    #[error("negative part of b ({b_minus}) exceeds delta = {delta}")]
    DeltaViolated { b_minus: f64, delta: f64 },

    #[error("ladder stalled: {0}")]
    LadderStall(String),

    #[error("dimension {0} is too low (need m >= 3)")]
    DimensionTooLow(usize),

    #[error("monotonicity violated: {0}")]
    MonotonicityViolated(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// Variant name, stable across releases.
    pub fn name(&self) -> &'static str {
        match self {
            Error::InvalidInput { .. } => "InvalidInput",
            Error::InvalidStep { .. } => "InvalidStep",
            Error::OutOfDomain { .. } => "OutOfDomain",
            Error::NonPositiveWarping { .. } => "NonPositiveWarping",
            Error::NotSubcritical { .. } => "NotSubcritical",
            Error::Inconclusive { .. } => "Inconclusive",
            Error::UnsupportedAlpha { .. } => "UnsupportedAlpha",
            Error::NonPositiveQuotient { .. } => "NonPositiveQuotient",
            Error::MassExceeded { .. } => "MassExceeded",
            Error::UnsupportedExponent { .. } => "UnsupportedExponent",
            Error::SingularPotential { .. } => "SingularPotential",
            Error::NonPositiveG { .. } => "NonPositiveG",
            Error::UnboundedRatio { .. } => "UnboundedRatio",
            Error::NoInteriorDof => "NoInteriorDof",
            Error::NotCoercive { .. } => "NotCoercive",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::BadNonlinearity { .. } => "BadNonlinearity",
            Error::DeltaViolated { .. } => "DeltaViolated",
            Error::LadderStall { .. } => "LadderStall",
            Error::DimensionTooLow { .. } => "DimensionTooLow",
            Error::MonotonicityViolated { .. } => "MonotonicityViolated",
            Error::Config { .. } => "Config",
            Error::Io { .. } => "Io",
        }
    }
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
