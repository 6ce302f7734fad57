use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("map is not uniformly expanding: E_min = {e_min} <= 1")]
    ExpansionViolation { e_min: f64 },

    #[error("function is not periodic: f(x+1) - f(x) deviates by {deviation:e} at x = {x}")]
    NotPeriodic { x: f64, deviation: f64 },

    #[error("circle lift is not monotone: g'({x}) = {derivative}")]
    NotMonotone { x: f64, derivative: f64 },

    #[error("root finder failed to invert the lift at target {target}")]
    RootNotFound { target: f64 },

    #[error("need at least {required} quadrature points, got {given}")]
    InsufficientQuadrature { required: usize, given: usize },

    #[error("QR iteration did not converge after {iterations} sweeps")]
    NoConvergence { iterations: usize },

    #[error("branch enumeration needs {requested} endpoints, cap is {cap}")]
    EnumerationCap { requested: u128, cap: u128 },

    #[error("coefficient support needs truncation N >= {required}, have N = {available}")]
    TruncationOverflow { required: usize, available: usize },

    #[error("|C(n)| = {value:e} at n = {n} is below the fit floor")]
    WindowUnderflow { n: usize, value: f64 },

    #[error("map does not satisfy E(0) = 0 (lift value {value})")]
    FixedPointConvention { value: f64 },

    #[error("operation requires {what}")]
    Unsupported { what: &'static str },

    #[error("matrix is singular")]
    Singular,

    #[error("malformed data: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
