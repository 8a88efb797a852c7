use thiserror::Error;

/// Errors produced by the relbelief library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {field}: {reason}")]
    InvalidModel { field: String, reason: String },

    #[error("observed data has zero evidence: m(x) = 0 under every parameter value")]
    ZeroEvidence,

    #[error("observation {0} is not valid for this model")]
    InvalidObservation(String),

    #[error("kernel row {row} sums to {sum}, expected 1")]
    NonStochasticKernel { row: usize, sum: f64 },

    #[error("psi index {index} out of range (support size {size})")]
    UnknownPsi { index: usize, size: usize },

    #[error("invalid loss specification: {0}")]
    InvalidLoss(String),

    #[error("ball loss requires coordinates on every psi value")]
    MissingCoordinates,

    #[error("operation requires a finite tabulated sample space")]
    InfiniteSampleSpace,

    #[error("decision rule covers {got} data points, sample space has {expected}")]
    RuleMismatch { expected: usize, got: usize },

    #[error("risk identity check failed: {what} differs by {residual:e}")]
    IdentityCheck { what: &'static str, residual: f64 },

    #[error("regions refer to supports of different sizes ({left} vs {right}) or tables of size {tables}")]
    TablesMismatch { left: usize, right: usize, tables: usize },

    #[error("brute-force enumeration over {0} psi values exceeds the limit of 20")]
    TooLargeForBruteForce(usize),

    #[error("region mass {attained} does not equal gamma {gamma} exactly")]
    InexactAttainment { gamma: f64, attained: f64 },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("adaptive quadrature failed on [{a}, {b}]: estimated error {error:e}")]
    QuadratureFailure { a: f64, b: f64, error: f64 },

    #[error("bin {bin} has zero prior mass")]
    ZeroBinMass { bin: usize },

    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),

    #[error("design matrix is singular or rank deficient")]
    SingularDesign,

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn model(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidModel {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by invalid user input rather than a runtime failure.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::QuadratureFailure { .. } | Error::IdentityCheck { .. } | Error::Io(_) | Error::HypothesisViolated(_)
        )
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
