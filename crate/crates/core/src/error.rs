use thiserror::Error;

/// Errors raised by the link-level model.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid OFDM configuration: {0}")]
    InvalidConfig(String),

    #[error("constellation order {0} is not a square of a power of two")]
    InvalidOrder(u32),

    #[error("path delay {delay_s} s is not shorter than the cyclic prefix ({cp_s} s)")]
    DelayExceedsCp { delay_s: f64, cp_s: f64 },

    #[error("subcarrier {0} is not in the used subcarrier set")]
    UnknownSubcarrier(i32),

    #[error("ICI coefficient requested for k == l == {0}")]
    SameSubcarrier(i32),

    #[error("channel realization has no paths")]
    EmptyChannel,

    #[error("invalid path parameters: {0}")]
    InvalidPath(String),

    #[error("unknown channel profile '{0}'")]
    UnknownProfile(String),

    #[error("invalid tap profile: {0}")]
    InvalidProfile(String),

    #[error("parse error at line {line}, field '{field}': {message}")]
    Parse {
        line: usize,
        field: String,
        message: String,
    },

    #[error("bit vector has length {got}, expected {expected}")]
    BitLength { expected: usize, got: usize },

    #[error("noise plus ICI variance is zero; SINR undefined")]
    DegenerateDenominator,

    #[error("channel coefficient is zero; zero-forcing undefined")]
    ZeroChannel,

    #[error("BER result was discarded (fewer than the minimum error bits)")]
    Discarded,

    #[error("BEP is zero; error factor undefined")]
    ZeroBep,

    #[error("sample covariance is singular or ill-conditioned (condition number {0:e})")]
    SingularCovariance(f64),

    #[error("invalid simulation parameters: {0}")]
    InvalidSim(String),
}

pub type Result<T> = std::result::Result<T, Error>;
