use thiserror::Error;

/// Failure modes shared by every module of the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} out of range: {detail}")]
    OutOfRange { name: &'static str, detail: String },

    #[error("pole of the gamma function at {0}")]
    Pole(f64),

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("underflow: {0}")]
    Underflow(String),

    #[error("unsupported region: {0}")]
    UnsupportedRegion(String),

    #[error("no convergence: {0}")]
    NonConvergence(String),

    #[error("bracket endpoints do not change sign: f({lo}) = {flo}, f({hi}) = {fhi}")]
    BracketSign { lo: f64, hi: f64, flo: f64, fhi: f64 },

    #[error("ambiguous sign near t = {0}")]
    AmbiguousSign(f64),

    #[error("insufficient sample: {0}")]
    InsufficientSample(String),

    #[error("wrong kernel kind: {0}")]
    WrongKind(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("mean mismatch: {0}")]
    MeanMismatch(String),

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn out_of_range(name: &'static str, detail: impl Into<String>) -> Error {
    Error::OutOfRange { name, detail: detail.into() }
}
