use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state has zero norm")]
    ZeroNorm,

    #[error(
        "truncation breach: weight {weight:.3e} on photon-cutoff states exceeds tolerance {tolerance:.1e}"
    )]
    TruncationBreach { weight: f64, tolerance: f64 },

    #[error("closed form requires kappa > g (got g = {g}, kappa = {kappa})")]
    DegenerateClosedForm { g: f64, kappa: f64 },

    #[error("growth condition violated: chain length m = {m} at p = {p} should satisfy m > 1/p")]
    GrowthCondition { m: usize, p: f64 },

    #[error("expected cost diverges: {0}")]
    Divergent(String),

    #[error("graph state: {0}")]
    Graph(String),

    #[error("dense verification is limited to {max} qubits, got {n}")]
    TooManyQubits { n: usize, max: usize },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn graph(msg: impl Into<String>) -> Self {
        Error::Graph(msg.into())
    }
}
