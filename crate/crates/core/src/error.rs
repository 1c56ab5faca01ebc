use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} = {value} is outside its domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("no density at x = {x}")]
    NoDensity { x: f64 },

    #[error("singular at x = {x}: survival probability is zero")]
    Singularity { x: f64 },

    #[error("unsupported distribution shape: {0}")]
    UnsupportedShape(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("tolerance {tol:e} not reached (best estimate {estimate}, error estimate {error:e})")]
    Accuracy { estimate: f64, error: f64, tol: f64 },

    #[error("no sign change on [{a}, {b}]: f(a) = {fa}, f(b) = {fb}")]
    Bracket { a: f64, b: f64, fa: f64, fb: f64 },

    #[error("cross-check failed: {0}")]
    CrossCheck(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("cannot parse instance id `{id}`: {reason}")]
    InstanceId { id: String, reason: String },

    #[error("i/o error on {path}: {reason}")]
    Io { path: String, reason: String },
}

pub(crate) fn domain(what: &'static str, value: f64, domain: &'static str) -> Error {
    Error::Domain {
        what,
        value,
        domain,
    }
}
