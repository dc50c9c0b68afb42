use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{name} = {value} is outside its domain ({constraint})")]
    Domain {
        name: &'static str,
        value: f64,
        constraint: &'static str,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mass at k = {k} is zero; psi is undefined inside the support")]
    ZeroMass { k: i64 },

    #[error("support mismatch: expected [{expected_lo}, {expected_hi}], got [{got_lo}, {got_hi}]")]
    SupportMismatch {
        expected_lo: i64,
        expected_hi: i64,
        got_lo: i64,
        got_hi: i64,
    },

    #[error("test function does not vanish below the support (f({k}) = {value})")]
    NotAdmissible { k: i64, value: f64 },

    #[error("c-function vanishes at k = {k}")]
    ZeroCFunction { k: i64 },

    #[error("psi({k}) = {value} gives a non-positive mass ratio")]
    NonPositiveRatio { k: i64, value: f64 },

    #[error("{routine} did not converge after {iterations} iterations")]
    NoConvergence {
        routine: &'static str,
        iterations: usize,
    },

    #[error(
        "quadrature failed on [{lo}, {hi}]: estimate {estimate}, error {error_estimate} after {intervals} intervals"
    )]
    Quadrature {
        lo: f64,
        hi: f64,
        estimate: f64,
        error_estimate: f64,
        intervals: usize,
    },

    #[error("support point {x} lies outside [0, 1]")]
    SupportOutsideUnitInterval { x: f64 },

    #[error("serialization: {0}")]
    Serialization(String),
}

impl Error {
    /// True for failures of a numerical routine, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NoConvergence { .. } | Error::Quadrature { .. })
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}
